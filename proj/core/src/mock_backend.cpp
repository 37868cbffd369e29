#include "lgir/mock_backend.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <regex>
#include <set>
#include <algorithm>

#include "lgir/text.hpp"

namespace lgir {

namespace {

constexpr std::string_view kQueryMarker = "Below is the query you need to solve:";

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t& state) {
    // 53 random mantissa bits in (0, 1).
    return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string uri_words(const std::string& uri) {
    auto stem = std::filesystem::path(uri).stem().string();
    for (char& c : stem) {
        if (c == '_' || c == '-' || c == '.') c = ' ';
    }
    return std::string(text::trim(stem));
}

// Words of a request that name visual content, for the demo roles.
std::set<std::string> content_words(std::string_view s) {
    static const std::set<std::string> kStop = {
        "a",    "an",   "the",     "is",   "are",  "it",   "its",  "of",     "in",   "on",    "with",
        "and",  "to",   "as",      "does", "do",   "image", "satisfy", "make", "show", "answer",
        "single", "yes", "no",     "or",   "there", "this", "that", "be",    "has",  "have",  "at"};
    std::set<std::string> out;
    for (auto& w : tokens(s)) {
        if (!kStop.count(w)) out.insert(std::move(w));
    }
    return out;
}

// True when every content word of `query` occurs in the last attached image's file name.
bool demo_image_matches(const ChatRequest& req, std::string_view query) {
    std::string uri;
    for (const auto& m : req.messages) {
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Image) uri = p.image.uri;
        }
    }
    const auto have = content_words(uri_words(uri));
    const auto want = content_words(query);
    if (want.empty() || have.empty()) return false;
    return std::all_of(want.begin(), want.end(), [&](const std::string& w) { return have.count(w) > 0; });
}

}  // namespace

std::vector<float> hashed_unit_vector(std::string_view seed, std::size_t dim) {
    const auto digest = sha256(std::span(reinterpret_cast<const std::uint8_t*>(seed.data()), seed.size()));
    std::uint64_t state = 0;
    for (int i = 0; i < 8; ++i) state = (state << 8) | digest[static_cast<std::size_t>(i)];
    std::vector<double> v(dim);
    double sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double u1 = unit_uniform(state);
        const double u2 = unit_uniform(state);
        v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        sq += v[i] * v[i];
    }
    const double inv = 1.0 / std::sqrt(sq);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] * inv);
    return out;
}

std::vector<float> hashed_bag_of_words(std::string_view s, std::size_t dim) {
    const auto words = tokens(s);
    if (words.empty()) return hashed_unit_vector(s, dim);
    std::vector<double> acc(dim, 0.0);
    for (const auto& w : words) {
        const auto v = hashed_unit_vector("word:" + w, dim);
        for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
    }
    double sq = 0.0;
    for (double x : acc) sq += x * x;
    if (sq == 0.0) return hashed_unit_vector(s, dim);
    const double inv = 1.0 / std::sqrt(sq);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
    return out;
}

std::string mock_match_text(const ChatRequest& req) {
    const auto joined = req.joined_text();
    const auto pos = joined.rfind(kQueryMarker);
    if (pos == std::string::npos) return joined;
    return joined.substr(pos + kQueryMarker.size());
}

MockQuery parse_mock_query(std::string_view prompt) {
    std::string_view section = prompt;
    if (auto pos = prompt.rfind(kQueryMarker); pos != std::string_view::npos) {
        section = prompt.substr(pos + kQueryMarker.size());
    }
    static const std::regex kAtomic(R"(^\s*\((\d+)\)\s*([A-Za-z]+)\s*:\s*(.+?)\s*$)");
    MockQuery q;
    for (auto line : text::split_lines(section)) {
        auto t = text::trim(line);
        if (t.starts_with("- ")) t = text::trim(t.substr(2));
        if (t.starts_with("Instruction:")) {
            q.instruction = std::string(text::trim(t.substr(12)));
        } else if (t.starts_with("Reference Image:")) {
            q.reference = std::string(text::trim(t.substr(16)));
        } else {
            std::match_results<std::string_view::const_iterator> m;
            if (std::regex_match(line.begin(), line.end(), m, kAtomic)) {
                try {
                    q.atomic_instructions.push_back(
                        {instruction_kind_from_string(m[2].str()), m[3].str()});
                } catch (const Error&) {
                }
            }
        }
    }
    return q;
}

std::string evaluator_instruction(std::string_view prompt) {
    constexpr std::string_view kTag = "<INSTRUCTION> \"";
    const auto start = prompt.find(kTag);
    if (start == std::string_view::npos) return {};
    const auto from = start + kTag.size();
    const auto end = prompt.find("\". The instruction", from);
    const auto end2 = end == std::string_view::npos ? prompt.find('"', from) : end;
    if (end2 == std::string_view::npos) return {};
    return std::string(prompt.substr(from, end2 - from));
}

MockBackend::MockBackend(std::string id, std::size_t dim) : id_(std::move(id)), dim_(dim) {}

void MockBackend::script(BackendRole role, std::string key, std::string response) {
    std::lock_guard lock(mutex_);
    scripts_.push_back({role, {std::move(key), std::move(response)}});
}

void MockBackend::on_chat(BackendRole role, ChatResponder responder) {
    std::lock_guard lock(mutex_);
    chat_[role] = std::move(responder);
}

void MockBackend::on_embed(BackendRole role, EmbedResponder responder) {
    std::lock_guard lock(mutex_);
    embed_[role] = std::move(responder);
}

void MockBackend::fail(BackendRole role, ErrorCode code) {
    std::lock_guard lock(mutex_);
    failures_[role] = code;
}

void MockBackend::clear_failure(BackendRole role) {
    std::lock_guard lock(mutex_);
    failures_.erase(role);
}

std::vector<MockBackend::Call> MockBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t MockBackend::call_count(BackendRole role) const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& c : calls_) n += c.role == role ? 1 : 0;
    return n;
}

void MockBackend::clear_calls() {
    std::lock_guard lock(mutex_);
    calls_.clear();
}

void MockBackend::record(BackendRole role, const ChatRequest* req, std::string text,
                         std::size_t images) {
    std::lock_guard lock(mutex_);
    calls_.push_back({role, req ? request_digest(role, *req) : sha256_hex(text), std::move(text), images});
}

void MockBackend::maybe_fail(BackendRole role) const {
    std::lock_guard lock(mutex_);
    if (auto it = failures_.find(role); it != failures_.end()) {
        throw Error(it->second, "mock failure for role " + std::string(to_string(role)));
    }
}

ChatResponse MockBackend::complete(BackendRole role, const ChatRequest& req) {
    record(role, &req, req.joined_text(), req.image_count());
    maybe_fail(role);

    const auto match = mock_match_text(req);
    ChatResponder responder;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [r, kv] : scripts_) {
            if (r == role && match.find(kv.first) != std::string::npos) {
                return ChatResponse{kv.second, 0, id_};
            }
        }
        if (auto it = chat_.find(role); it != chat_.end()) responder = it->second;
    }
    if (responder) return ChatResponse{responder(req), 0, id_};
    throw Error(ErrorCode::InvalidArgument,
                "mock backend has no script for role " + std::string(to_string(role)));
}

std::vector<float> MockBackend::embed(BackendRole role, const EmbedRequest& req) {
    const std::string payload = req.modality == Modality::Text ? req.text
                                                               : (req.image.bytes.empty() ? req.image.uri
                                                                                          : sha256_hex(req.image.bytes));
    record(role, nullptr, payload, req.modality == Modality::Image ? 1 : 0);
    maybe_fail(role);

    EmbedResponder responder;
    {
        std::lock_guard lock(mutex_);
        if (auto it = embed_.find(role); it != embed_.end()) responder = it->second;
    }
    if (responder) return responder(req);
    if (req.modality == Modality::Text) return hashed_bag_of_words(req.text, dim_);
    return hashed_unit_vector("image:" + payload, dim_);
}

std::shared_ptr<MockBackend> make_demo_mock(std::size_t dim) {
    auto mock = std::make_shared<MockBackend>("demo-mock", dim);

    mock->on_chat(BackendRole::Captioner, [](const ChatRequest& req) -> std::string {
        for (const auto& m : req.messages) {
            for (const auto& p : m.parts) {
                if (p.kind != ContentPart::Kind::Image) continue;
                auto words = uri_words(p.image.uri);
                if (!words.empty()) return words;
                return "An image with fingerprint " + sha256_hex(p.image.bytes).substr(0, 8) + ".";
            }
        }
        return "An empty image.";
    });

    mock->on_chat(BackendRole::Reasoner, [](const ChatRequest& req) -> std::string {
        const auto q = parse_mock_query(req.joined_text());
        if (!q.atomic_instructions.empty()) {
            std::string out = "2. **Step 2.** Based on step 1, the questions and answers are:\n";
            for (std::size_t i = 0; i < q.atomic_instructions.size(); ++i) {
                const auto& a = q.atomic_instructions[i];
                std::string body(text::trim(a.text));
                if (!body.empty() && body.back() == '.') body.pop_back();
                const bool negated = a.kind == InstructionKind::Removal;
                out += "    (" + std::to_string(i + 1) + ") Q: Does the image satisfy: " + body +
                       "? A: " + (negated ? "No. (False)" : "Yes. (True)") + "\n";
            }
            return out;
        }
        const bool blank = q.reference.empty() || q.reference == "A blank image.";
        nlohmann::json out{
            {"Atomic Instructions",
             nlohmann::json::array({{{"Type", "Addition"}, {"Instruction", "Make the image show " + q.instruction + "."}}})},
            {"Core Elements", q.instruction},
            {"Enhanced Details", blank ? q.instruction : q.instruction + ", as in: " + q.reference},
            {"Comprehensive Synthesis", blank ? q.instruction : q.reference + " " + q.instruction}};
        return "```json\n" + out.dump() + "\n```";
    });

    mock->on_chat(BackendRole::Verifier, [](const ChatRequest& req) -> std::string {
        return demo_image_matches(req, req.joined_text()) ? "Yes." : "No.";
    });

    mock->on_chat(BackendRole::Evaluator, [](const ChatRequest& req) -> std::string {
        const auto instruction = evaluator_instruction(req.joined_text());
        if (demo_image_matches(req, instruction)) return "ANSWER: Yes\nEvery requested element appears in the file name.";
        return "ANSWER: No\nSome requested element is missing from the file name.";
    });

    mock->on_embed(BackendRole::ImageEncoder, [dim](const EmbedRequest& req) {
        auto words = uri_words(req.image.uri);
        if (!words.empty()) return hashed_bag_of_words(words, dim);
        return hashed_unit_vector("image:" + sha256_hex(req.image.bytes), dim);
    });
    return mock;
}

}  // namespace lgir
