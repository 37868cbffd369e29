#include "lgir/prompts.hpp"

#include <fstream>
#include <sstream>

#include "lgir/text.hpp"

namespace lgir {

namespace detail {
// Generated from core/resources/prompts at configure time.
const std::map<std::string, std::string>& embedded_prompt_files();
}  // namespace detail

namespace {

constexpr std::string_view kExamples = "IN_CONTEXT_EXAMPLES";

std::string require_file(const std::map<std::string, std::string>& files, const std::string& name) {
    auto it = files.find(name);
    if (it == files.end()) throw Error(ErrorCode::TemplateError, "missing prompt resource " + name);
    return it->second;
}

std::string strip_trailing_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

PromptTemplate load_template(const std::map<std::string, std::string>& files, TemplateId id,
                             const std::string& dir) {
    PromptTemplate t;
    t.id = id;
    t.body = require_file(files, dir + "/body.txt");
    for (std::size_t i = 1;; ++i) {
        auto it = files.find(dir + "/example_" + std::to_string(i) + ".txt");
        if (it == files.end()) break;
        t.in_context_examples.push_back(it->second);
    }
    return t;
}

std::string joined_examples(const PromptTemplate& t) {
    std::string out;
    for (std::size_t i = 0; i < t.in_context_examples.size(); ++i) {
        if (i > 0) out += "---\n";
        out += t.in_context_examples[i];
    }
    return out;
}

void require_text(std::string_view value, std::string_view what) {
    if (text::is_blank(value)) {
        throw Error(ErrorCode::EmptyText, std::string(what) + " must not be empty");
    }
}

}  // namespace

PromptLibrary PromptLibrary::from_files(const std::map<std::string, std::string>& files) {
    PromptLibrary lib;
    auto v = files.find("VERSION");
    lib.version_ = v == files.end() ? "unversioned" : std::string(text::trim(v->second));
    lib.templates_[TemplateId::Prompt1] = load_template(files, TemplateId::Prompt1, "prompt1");
    lib.templates_[TemplateId::Prompt2] = load_template(files, TemplateId::Prompt2, "prompt2");
    lib.templates_[TemplateId::Prompt3] = load_template(files, TemplateId::Prompt3, "prompt3");
    lib.captioner_ = strip_trailing_newline(require_file(files, "aux/captioner.txt"));
    lib.verifier_ = strip_trailing_newline(require_file(files, "aux/verifier.txt"));
    lib.stage1_retry_ = strip_trailing_newline(require_file(files, "aux/stage1_retry.txt"));
    lib.stage2_retry_ = strip_trailing_newline(require_file(files, "aux/stage2_retry.txt"));
    return lib;
}

const PromptLibrary& PromptLibrary::builtin() {
    static const PromptLibrary lib = from_files(detail::embedded_prompt_files());
    return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::ConfigError, "prompt directory not found: " + dir.string());
    }
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(entry.path(), dir).generic_string()] = ss.str();
    }
    return from_files(files);
}

const PromptTemplate& PromptLibrary::get(TemplateId id) const { return templates_.at(id); }

std::string render_template(std::string_view body, const std::map<std::string, std::string>& bindings,
                            std::span<const std::string_view> required) {
    std::string out;
    out.reserve(body.size() * 2);
    std::map<std::string, bool> seen;
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto open = body.find("[[", pos);
        if (open == std::string_view::npos) {
            out.append(body.substr(pos));
            break;
        }
        const auto close = body.find("]]", open + 2);
        if (close == std::string_view::npos) {
            throw Error(ErrorCode::TemplateError, "unterminated placeholder in template");
        }
        const std::string name(body.substr(open + 2, close - open - 2));
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw Error(ErrorCode::TemplateError, "unbound placeholder [[" + name + "]]");
        }
        out.append(body.substr(pos, open - pos));
        out.append(it->second);
        seen[name] = true;
        pos = close + 2;
    }
    for (auto name : required) {
        if (!seen.count(std::string(name))) {
            throw Error(ErrorCode::TemplateError,
                        "template has no [[" + std::string(name) + "]] placeholder");
        }
    }
    return out;
}

std::string format_atomic_instructions(std::span<const AtomicInstruction> atomic) {
    std::string out;
    for (std::size_t i = 0; i < atomic.size(); ++i) {
        if (i > 0) out += '\n';
        out += "    (" + std::to_string(i + 1) + ") " + std::string(to_string(atomic[i].kind)) + ": " +
               std::string(text::trim(atomic[i].text));
    }
    return out;
}

std::string render_prompt1(std::string_view instruction, std::string_view ref_desc,
                           const PromptLibrary& lib) {
    require_text(instruction, "instruction");
    require_text(ref_desc, "reference description");
    const auto& t = lib.get(TemplateId::Prompt1);
    static constexpr std::string_view kRequired[] = {"INSTRUCTION", "REF_IMAGE_DESC"};
    return render_template(t.body,
                           {{"INSTRUCTION", std::string(instruction)},
                            {"REF_IMAGE_DESC", std::string(ref_desc)},
                            {std::string(kExamples), joined_examples(t)}},
                           kRequired);
}

std::string render_prompt2(std::string_view instruction, std::span<const AtomicInstruction> atomic,
                           const PromptLibrary& lib) {
    if (atomic.empty()) {
        throw Error(ErrorCode::EmptyDecomposition, "no atomic instructions to convert");
    }
    require_text(instruction, "instruction");
    const auto& t = lib.get(TemplateId::Prompt2);
    static constexpr std::string_view kRequired[] = {"INSTRUCTION", "ATOMIC_INST"};
    return render_template(t.body,
                           {{"INSTRUCTION", std::string(instruction)},
                            {"ATOMIC_INST", format_atomic_instructions(atomic)},
                            {std::string(kExamples), joined_examples(t)}},
                           kRequired);
}

std::string render_prompt3(std::string_view instruction, const PromptLibrary& lib) {
    require_text(instruction, "instruction");
    static constexpr std::string_view kRequired[] = {"INSTRUCTION"};
    return render_template(lib.get(TemplateId::Prompt3).body,
                           {{"INSTRUCTION", std::string(instruction)}}, kRequired);
}

std::string render_verifier_question(std::string_view question, const PromptLibrary& lib) {
    require_text(question, "question");
    static constexpr std::string_view kRequired[] = {"QUESTION"};
    return render_template(lib.verifier_template(), {{"QUESTION", std::string(question)}}, kRequired);
}

}  // namespace lgir
