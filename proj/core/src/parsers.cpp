#include "lgir/parsers.hpp"

#include <map>
#include <optional>
#include <regex>

#include "lgir/text.hpp"

namespace lgir {

using nlohmann::json;

namespace {

std::optional<json> try_parse(std::string_view s) {
    auto j = json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

// Scans for a brace-balanced object starting at each '{', honouring strings.
std::optional<json> scan_objects(std::string_view s) {
    for (std::size_t start = s.find('{'); start != std::string_view::npos;
         start = s.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < s.size(); ++i) {
            const char c = s[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                if (auto j = try_parse(s.substr(start, i - start + 1))) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

const json* find_key(const json& j, std::string_view normalized, int depth = 0) {
    if (depth > 4 || !j.is_object()) return nullptr;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (text::normalize_key(it.key()) == normalized) return &it.value();
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (const auto* hit = find_key(it.value(), normalized, depth + 1)) return hit;
    }
    return nullptr;
}

const json* find_any(const json& j, std::initializer_list<std::string_view> keys) {
    for (auto k : keys) {
        if (const auto* hit = find_key(j, k)) return hit;
    }
    return nullptr;
}

std::string string_field(const json& obj, std::initializer_list<std::string_view> keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const auto norm = text::normalize_key(it.key());
        for (auto k : keys) {
            if (norm == k && it->is_string()) return it->get<std::string>();
        }
    }
    return {};
}

AtomicInstruction instruction_from_json(const json& item) {
    if (item.is_string()) {
        const auto s = item.get<std::string>();
        const auto colon = s.find(':');
        if (colon == std::string::npos) {
            throw Error(ErrorCode::ParseError, "atomic instruction without a type: " + s);
        }
        return {instruction_kind_from_string(text::trim(std::string_view(s).substr(0, colon))),
                std::string(text::trim(std::string_view(s).substr(colon + 1)))};
    }
    if (!item.is_object()) throw Error(ErrorCode::ParseError, "atomic instruction is not an object");
    const auto kind = string_field(item, {"type", "kind", "category"});
    const auto body = string_field(item, {"instruction", "text", "content", "description"});
    if (kind.empty()) throw Error(ErrorCode::ParseError, "atomic instruction without a type");
    return {instruction_kind_from_string(text::trim(kind)), std::string(text::trim(body))};
}

std::string description(const json& j, std::string_view key, std::string_view label) {
    const auto* v = find_key(j, key);
    if (!v) throw Error(ErrorCode::ParseError, "reasoner output lacks \"" + std::string(label) + "\"");
    if (v->is_null()) return {};
    if (!v->is_string()) {
        throw Error(ErrorCode::ParseError, "\"" + std::string(label) + "\" is not a string");
    }
    return std::string(text::trim(v->get<std::string>()));
}

std::string first_token(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && !std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
    std::string tok;
    while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
        tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
        ++i;
    }
    return tok;
}

}  // namespace

json extract_json_object(std::string_view raw) {
    static const std::regex kFence(R"(```(?:json|JSON)?\s*\n?([\s\S]*?)```)");
    const std::string owned(raw);
    for (std::sregex_iterator it(owned.begin(), owned.end(), kFence), end; it != end; ++it) {
        const auto inner = (*it)[1].str();
        if (auto j = try_parse(text::trim(inner))) return *j;
        if (auto j = scan_objects(inner)) return *j;
    }
    if (auto j = scan_objects(raw)) return *j;
    return json(json::value_t::discarded);
}

Stage1Output parse_stage1_output(std::string_view raw) {
    const auto j = extract_json_object(raw);
    if (j.is_discarded()) throw Error(ErrorCode::ParseError, "no JSON object in reasoner output");

    Stage1Output out;
    if (const auto* list = find_any(j, {"atomicinstructions", "instructions", "atomicinstruction"})) {
        if (list->is_array()) {
            for (const auto& item : *list) out.atomic_instructions.push_back(instruction_from_json(item));
        } else if (list->is_object() || list->is_string()) {
            out.atomic_instructions.push_back(instruction_from_json(*list));
        }
    }
    out.descriptions.core_elements = description(j, "coreelements", "Core Elements");
    out.descriptions.enhanced_details = description(j, "enhanceddetails", "Enhanced Details");
    out.descriptions.comprehensive_synthesis =
        description(j, "comprehensivesynthesis", "Comprehensive Synthesis");
    return out;
}

json stage1_to_canonical_json(const Stage1Output& out) {
    json list = json::array();
    for (const auto& a : out.atomic_instructions) {
        list.push_back({{"Type", to_string(a.kind)}, {"Instruction", a.text}});
    }
    return json{{"Atomic Instructions", std::move(list)},
                {"Core Elements", out.descriptions.core_elements},
                {"Enhanced Details", out.descriptions.enhanced_details},
                {"Comprehensive Synthesis", out.descriptions.comprehensive_synthesis}};
}

std::vector<Proposition> parse_stage2_output(std::string_view raw) {
    static const std::regex kNumbered(R"(^\s*(?:[-*]\s*)?\(?(\d+)[).:]\s*(.*)$)");
    static const std::regex kQA(R"(Q\s*[:：]\s*(.+?)\s*A\s*[:：]\s*(.*)$)", std::regex::icase);
    static const std::regex kTruth(R"(\((true|false)\))", std::regex::icase);

    std::map<int, std::string> statements;
    struct Row {
        int number;
        std::string question;
        bool truth;
    };
    std::vector<Row> rows;

    for (auto line_view : text::split_lines(raw)) {
        const std::string line(line_view);
        std::smatch qa;
        if (std::regex_search(line, qa, kQA)) {
            const auto answer = qa[2].str();
            std::smatch t;
            std::optional<bool> truth;
            if (std::regex_search(answer, t, kTruth)) {
                truth = text::iequals(t[1].str(), "true");
            } else {
                const auto a = parse_yes_no(answer);
                if (a != Answer::Ambiguous) truth = a == Answer::Yes;
            }
            if (!truth) continue;
            std::smatch num;
            const int n = std::regex_match(line, num, kNumbered) ? std::stoi(num[1].str())
                                                                 : static_cast<int>(rows.size()) + 1;
            rows.push_back({n, std::string(text::trim(qa[1].str())), *truth});
            continue;
        }
        std::smatch num;
        if (std::regex_match(line, num, kNumbered)) {
            const auto body = std::string(text::trim(num[2].str()));
            if (!body.empty() && !body.starts_with("**") && !statements.count(std::stoi(num[1].str()))) {
                statements[std::stoi(num[1].str())] = body;
            }
        }
    }

    std::vector<Proposition> out;
    if (rows.empty()) {
        // Some reasoners answer with JSON: [{"question": ..., "answer"/"truth_value": ...}].
        const auto j = extract_json_object(raw);
        if (!j.is_discarded()) {
            if (const auto* list = find_any(j, {"propositions", "questions"}); list && list->is_array()) {
                for (const auto& item : *list) {
                    if (!item.is_object()) continue;
                    Proposition p;
                    p.question = string_field(item, {"question", "q"});
                    p.statement = string_field(item, {"statement", "proposition", "p"});
                    if (auto it = item.find("truth_value"); it != item.end() && it->is_boolean()) {
                        p.truth_value = it->get<bool>();
                    } else {
                        const auto a = parse_yes_no(string_field(item, {"answer", "a"}));
                        if (a == Answer::Ambiguous) continue;
                        p.truth_value = a == Answer::Yes;
                    }
                    if (p.question.empty()) continue;
                    if (p.statement.empty()) p.statement = p.question;
                    out.push_back(std::move(p));
                }
            }
        }
        if (out.empty()) throw Error(ErrorCode::ParseError, "no propositions in reasoner output");
        return out;
    }
    for (const auto& r : rows) {
        auto it = statements.find(r.number);
        out.push_back({it != statements.end() ? it->second : r.question, r.question, r.truth});
    }
    return out;
}

Answer parse_yes_no(std::string_view raw) {
    const auto tok = first_token(raw);
    if (tok == "yes") return Answer::Yes;
    if (tok == "no") return Answer::No;
    return Answer::Ambiguous;
}

EvaluatorReading parse_evaluator_output(std::string_view raw) {
    const auto lines = text::split_lines(raw);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = text::trim(lines[i]);
        while (!line.empty() && (line.front() == '*' || line.front() == '#' || line.front() == '-' ||
                                 line.front() == '>')) {
            line = text::trim(line.substr(1));
        }
        if (line.size() < 7 || !text::iequals(line.substr(0, 7), "answer:")) {
            const auto marker = text::to_lower(line).find("answer:");
            if (marker == std::string::npos || marker > 2) continue;
            line = line.substr(marker);
        }
        EvaluatorReading r;
        auto rest = line.substr(7);
        r.answer = parse_yes_no(rest);
        // Justification: anything after the verdict word on this line, then the following lines.
        std::string tail;
        if (r.answer != Answer::Ambiguous) {
            auto after = text::trim(rest);
            while (!after.empty() && !std::isalpha(static_cast<unsigned char>(after.front()))) {
                after.remove_prefix(1);
            }
            after.remove_prefix(r.answer == Answer::Yes ? 3 : 2);
            after = text::trim(after);
            while (!after.empty() && (after.front() == '.' || after.front() == ',' ||
                                      after.front() == '*' || after.front() == ']')) {
                after = text::trim(after.substr(1));
            }
            tail = std::string(after);
        }
        for (std::size_t k = i + 1; k < lines.size(); ++k) {
            if (!tail.empty()) tail += '\n';
            tail += std::string(lines[k]);
        }
        r.justification = std::string(text::trim(tail));
        return r;
    }
    return {Answer::Ambiguous, std::string(text::trim(raw))};
}

}  // namespace lgir
