#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgir/types.hpp"

namespace lgir {

enum class TemplateId { Prompt1, Prompt2, Prompt3 };

/// A versioned prompt resource. `body` carries [[NAME]] placeholders;
/// [[IN_CONTEXT_EXAMPLES]] expands to the example blocks joined by "---\n".
struct PromptTemplate {
    TemplateId id = TemplateId::Prompt1;
    std::string body;
    std::vector<std::string> in_context_examples;
};

inline constexpr std::size_t kDefaultExampleCount = 5;

/// Prompt bodies, examples and the auxiliary role prompts.
class PromptLibrary {
public:
    /// The resource set compiled into the library.
    static const PromptLibrary& builtin();
    /// Same layout as the shipped resources (prompt1/body.txt, prompt1/example_N.txt, ...).
    static PromptLibrary load(const std::filesystem::path& dir);

    const PromptTemplate& get(TemplateId id) const;
    const std::string& version() const { return version_; }
    const std::string& captioner_prompt() const { return captioner_; }
    const std::string& verifier_template() const { return verifier_; }
    const std::string& stage1_retry() const { return stage1_retry_; }
    const std::string& stage2_retry() const { return stage2_retry_; }

private:
    static PromptLibrary from_files(const std::map<std::string, std::string>& files);

    std::string version_;
    std::map<TemplateId, PromptTemplate> templates_;
    std::string captioner_;
    std::string verifier_;
    std::string stage1_retry_;
    std::string stage2_retry_;
};

/// Substitutes [[NAME]] tokens in one left-to-right pass, so bound values are
/// never rescanned. Throws TemplateError for an unbound token or when a name
/// in `required` never occurs in the template.
std::string render_template(std::string_view body, const std::map<std::string, std::string>& bindings,
                            std::span<const std::string_view> required = {});

std::string render_prompt1(std::string_view instruction, std::string_view ref_desc,
                           const PromptLibrary& lib = PromptLibrary::builtin());
std::string render_prompt2(std::string_view instruction, std::span<const AtomicInstruction> atomic,
                           const PromptLibrary& lib = PromptLibrary::builtin());
std::string render_prompt3(std::string_view instruction,
                           const PromptLibrary& lib = PromptLibrary::builtin());
std::string render_verifier_question(std::string_view question,
                                     const PromptLibrary& lib = PromptLibrary::builtin());

/// "    (1) Addition: ..." lines, one per instruction, newline separated.
std::string format_atomic_instructions(std::span<const AtomicInstruction> atomic);

}  // namespace lgir
