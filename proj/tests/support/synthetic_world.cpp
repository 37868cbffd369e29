#include "synthetic_world.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>
#include <set>

#include "lgir/parsers.hpp"
#include "lgir/text.hpp"

namespace synth {

using namespace lgir;

namespace {

constexpr std::string_view kMagic = "synthetic-image|";

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
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

bool contains(const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<const ImagePart*> attached_images(const ChatRequest& req) {
    std::vector<const ImagePart*> out;
    for (const auto& m : req.messages) {
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Image) out.push_back(&p.image);
        }
    }
    return out;
}

// "(q07)" style case tag carried from the instruction into descriptions.
std::string case_tag(std::string_view s) {
    static const std::regex kTag(R"(\(q\d+\))");
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(s.begin(), s.end(), m, kTag)) return m.str();
    return {};
}

std::string with_tag(std::string text, const std::string& tag) {
    if (tag.empty()) return text;
    return text + " " + tag;
}

std::string prompt1_answer(const MockQuery& q, const WorldOptions& opt) {
    const Attrs instr = attrs_of_text(q.instruction, opt.scenes);
    const bool blank = q.reference.empty() || q.reference == kBlankReference;
    const Attrs ref = blank ? Attrs{} : attrs_of_text(q.reference, opt.scenes);
    const Attrs target = merge(ref, instr);
    const std::string tag = case_tag(q.instruction);

    Stage1Output out;
    auto add = [&](const std::optional<std::string>& want, const std::optional<std::string>& had,
                   const std::string& what) {
        if (want) {
            if (!had) {
                out.atomic_instructions.push_back({InstructionKind::Addition, "Make it " + *want + "."});
            } else if (*had != *want) {
                out.atomic_instructions.push_back(
                    {InstructionKind::Modification, "Change the " + what + " from " + *had + " to " + *want + "."});
            } else {
                out.atomic_instructions.push_back({InstructionKind::Retention, "Keep it " + *want + "."});
            }
        } else if (had) {
            out.atomic_instructions.push_back({InstructionKind::Retention, "Keep it " + *had + "."});
        }
    };
    add(instr.object, ref.object, "object");
    add(instr.color, ref.color, "color");
    add(instr.scene, ref.scene, "scene");

    const auto ce = describe(instr).empty() ? describe(target) : describe(instr);
    out.descriptions = {with_tag(ce, tag), with_tag(describe(target), tag), with_tag(describe(target), tag)};
    return "```json\n" + stage1_to_canonical_json(out).dump(2) + "\n```";
}

std::string prompt2_answer(const MockQuery& q, const WorldOptions& opt) {
    std::vector<std::string> seen;
    for (const auto& a : q.atomic_instructions) {
        // Only the target value of a modification is checkable.
        const auto text = a.kind == InstructionKind::Modification && a.text.find(" to ") != std::string::npos
                              ? a.text.substr(a.text.rfind(" to "))
                              : a.text;
        const Attrs at = attrs_of_text(text, opt.scenes);
        for (const auto& v : {at.object, at.color, opt.omit_scene_propositions ? std::nullopt : at.scene}) {
            if (v && !contains(seen, *v)) seen.push_back(*v);
        }
    }
    std::string statements = "1. **Step 1.** Based on the atomic instructions, the statements are:\n";
    std::string questions = "2. **Step 2.** Based on step 1, the questions and answers are:\n";
    for (std::size_t i = 0; i < seen.size(); ++i) {
        const auto n = "    (" + std::to_string(i + 1) + ") ";
        statements += n + "The image shows " + seen[i] + ".\n";
        questions += n + "Q: Does the image show " + seen[i] + "? A: Yes. (True)\n";
    }
    return statements + "\n" + questions;
}

std::vector<float> normalized(std::vector<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / std::sqrt(sq));
    return out;
}

// One basis direction per attribute value plus a small shared bias.
std::vector<float> attribute_vector(const Attrs& a, const std::vector<std::string>& scenes) {
    const std::size_t d = kObjects.size() + kColors.size() + scenes.size() + 1;
    std::vector<double> v(d, 0.0);
    auto set = [&](const std::optional<std::string>& val, const std::vector<std::string>& vocab, std::size_t off) {
        if (!val) return;
        const auto it = std::find(vocab.begin(), vocab.end(), *val);
        if (it != vocab.end()) v[off + static_cast<std::size_t>(it - vocab.begin())] = 1.0;
    };
    set(a.object, kObjects, 0);
    set(a.color, kColors, kObjects.size());
    set(a.scene, scenes, kObjects.size() + kColors.size());
    v[d - 1] = 0.25;
    return normalized(std::move(v));
}

std::vector<Attrs> all_images(const std::vector<std::string>& scenes) {
    std::vector<Attrs> out;
    for (const auto& o : kObjects) {
        for (const auto& c : kColors) {
            for (const auto& s : scenes) out.push_back({o, c, s});
        }
    }
    return out;
}

BenchmarkCase tir_case(const std::string& id, const Attrs& target) {
    BenchmarkCase c;
    c.id = id;
    c.query = {QueryKind::TIR, describe(target), std::nullopt, {}};
    c.ground_truth = {image_id(target)};
    return c;
}

}  // namespace

std::string image_id(const Attrs& a) {
    return "img_" + a.object.value_or("x") + "_" + a.color.value_or("x") + "_" + a.scene.value_or("x");
}

Bytes image_bytes(const Attrs& a) {
    return to_bytes(std::string(kMagic) + "object=" + a.object.value_or("") + "|color=" + a.color.value_or("") +
                    "|scene=" + a.scene.value_or("") + "|id=" + image_id(a));
}

std::optional<Attrs> attrs_of_bytes(const Bytes& bytes) {
    const auto s = lgir::to_string(bytes);
    if (!s.starts_with(kMagic)) return std::nullopt;
    Attrs a;
    auto field = [&](const std::string& key) -> std::optional<std::string> {
        const auto pos = s.find("|" + key + "=");
        if (pos == std::string::npos) return std::nullopt;
        const auto from = pos + key.size() + 2;
        const auto end = s.find('|', from);
        auto v = s.substr(from, end == std::string::npos ? std::string::npos : end - from);
        if (v.empty()) return std::nullopt;
        return v;
    };
    a.object = field("object");
    a.color = field("color");
    a.scene = field("scene");
    return a;
}

Attrs attrs_of_text(std::string_view s, const std::vector<std::string>& scenes) {
    Attrs a;
    for (const auto& w : words(s)) {
        if (contains(kObjects, w)) a.object = w;
        if (contains(kColors, w)) a.color = w;
        if (contains(scenes, w)) a.scene = w;
    }
    return a;
}

Attrs merge(const Attrs& base, const Attrs& change) {
    return {change.object ? change.object : base.object, change.color ? change.color : base.color,
            change.scene ? change.scene : base.scene};
}

std::string describe(const Attrs& a) {
    std::string out;
    if (a.color) out += *a.color;
    if (a.object) out += (out.empty() ? "" : " ") + *a.object;
    if (a.scene) out += (out.empty() ? "something on a " : " on a ") + *a.scene;
    if (out.empty()) return out;
    return "a " + out;
}

bool satisfies(const Attrs& have, const Attrs& want) {
    if (want.object && have.object != want.object) return false;
    if (want.color && have.color != want.color) return false;
    if (want.scene && have.scene != want.scene) return false;
    return true;
}

void install_oracles(MockBackend& backend, const WorldOptions& opt) {
    backend.on_chat(BackendRole::Reasoner, [opt](const ChatRequest& req) {
        const auto q = parse_mock_query(req.joined_text());
        if (!q.atomic_instructions.empty()) return prompt2_answer(q, opt);
        return prompt1_answer(q, opt);
    });
    backend.on_chat(BackendRole::Captioner, [](const ChatRequest& req) {
        const auto imgs = attached_images(req);
        const auto a = imgs.empty() ? std::nullopt : attrs_of_bytes(imgs.back()->bytes);
        return a ? describe(*a) : std::string("an unknown picture");
    });
    backend.on_chat(BackendRole::Verifier, [opt](const ChatRequest& req) {
        const auto imgs = attached_images(req);
        const auto have = imgs.empty() ? std::nullopt : attrs_of_bytes(imgs.back()->bytes);
        const Attrs want = attrs_of_text(req.joined_text(), opt.scenes);
        const bool any = want.object || want.color || want.scene;
        return std::string(have && any && satisfies(*have, want) ? "Yes." : "No.");
    });
    backend.on_chat(BackendRole::Evaluator, [opt](const ChatRequest& req) {
        const auto imgs = attached_images(req);
        const Attrs said = attrs_of_text(evaluator_instruction(req.joined_text()), opt.scenes);
        Attrs want = said;
        if (imgs.size() == 2) {
            if (auto ref = attrs_of_bytes(imgs.front()->bytes)) want = merge(*ref, said);
        }
        const auto have = imgs.empty() ? std::nullopt : attrs_of_bytes(imgs.back()->bytes);
        const bool ok = have && (want.object || want.color || want.scene) && satisfies(*have, want);
        return std::string(ok ? "ANSWER: Yes\nThe candidate shows " : "ANSWER: No\nThe candidate does not show ") +
               describe(want) + ".";
    });
}

World::World(WorldOptions opt)
    : options(std::move(opt)), backend(std::make_shared<MockBackend>("oracle")),
      gateway(GatewayOptions{.max_retries = 2, .backoff_base_ms = 1, .timeout_ms = 10000,
                             .per_role_concurrency = 8, .expected_dim = std::nullopt}) {
    images = all_images(options.scenes);
    for (const auto& a : images) source.add("mem://" + image_id(a), image_bytes(a));
    install_oracles(*backend, options);
    for (auto role : kAllRoles) gateway.bind(role, backend);
}

EngineContext World::ctx() { return EngineContext{gateway, cache, source, config, PromptLibrary::builtin(), 8}; }

std::vector<ManifestEntry> World::manifest() const {
    std::vector<ManifestEntry> out;
    for (const auto& a : images) out.push_back({image_id(a), "mem://" + image_id(a)});
    return out;
}

void World::build_index() {
    IngestOptions opts;
    opts.workers = 4;
    index = ingest(manifest(), source, gateway, cache, opts);
}

std::unique_ptr<World> make_e2e_world() {
    auto w = std::make_unique<World>(WorldOptions{});
    const auto scenes = w->options.scenes;
    auto encode_text = [scenes](const EmbedRequest& req) { return attribute_vector(attrs_of_text(req.text, scenes), scenes); };
    auto encode_image = [scenes](const EmbedRequest& req) {
        const auto a = attrs_of_bytes(req.image.bytes);
        return attribute_vector(a.value_or(Attrs{}), scenes);
    };
    w->backend->on_embed(BackendRole::TextEncoder, encode_text);
    w->backend->on_embed(BackendRole::ImageEncoder, encode_image);
    w->build_index();

    // Text-to-image: every fourth image, spread over all attribute values.
    for (std::size_t i = 0; i < w->images.size(); i += 4) {
        w->cases.push_back(tir_case("tir_" + std::to_string(i / 4), w->images[(i + i / 4) % w->images.size()]));
    }
    // Composed: reference plus a one- or two-attribute change.
    const std::vector<std::pair<std::string, Attrs>> edits{
        {"make it red", {std::nullopt, "red", std::nullopt}},
        {"turn it into a cat", {"cat", std::nullopt, std::nullopt}},
        {"put it on a street", {std::nullopt, std::nullopt, "street"}},
        {"make it yellow and move it to the beach", {std::nullopt, "yellow", "beach"}},
        {"replace it with a blue bike", {"bike", "blue", std::nullopt}},
        {"make it green", {std::nullopt, "green", std::nullopt}},
        {"show a dog instead", {"dog", std::nullopt, std::nullopt}},
        {"turn it into a car on the street", {"car", std::nullopt, "street"}},
    };
    for (std::size_t i = 0; i < edits.size(); ++i) {
        const Attrs ref = w->images[(i * 5 + 3) % w->images.size()];
        Attrs target = merge(ref, edits[i].second);
        if (target == ref) continue;
        BenchmarkCase c;
        c.id = "cir_" + std::to_string(i);
        c.query = {QueryKind::CIR, edits[i].first, w->index.record(image_id(ref)), {}};
        c.ground_truth = {image_id(target)};
        w->cases.push_back(std::move(c));
    }
    // Dialog: object, then color, then scene.
    for (std::size_t i = 0; i < 4; ++i) {
        const Attrs t = w->images[(i * 9 + 2) % w->images.size()];
        BenchmarkCase c;
        c.id = "chat_" + std::to_string(i);
        c.dialog_rounds = std::vector<std::string>{"a " + *t.object, "it is " + *t.color, "on a " + *t.scene};
        c.query = {QueryKind::ChatIR, c.dialog_rounds->back(), std::nullopt, {}};
        c.ground_truth = {image_id(t)};
        w->cases.push_back(std::move(c));
    }
    return w;
}

std::unique_ptr<World> make_ablation_world(std::vector<AblationCase>* plan_out) {
    WorldOptions opt;
    opt.scenes = {"beach", "street", "forest"};
    opt.omit_scene_propositions = true;
    auto w = std::make_unique<World>(opt);

    std::mt19937 rng(20240611);
    const std::size_t n = w->images.size();
    std::vector<AblationCase> plan;
    const std::string types = "AAAAABBBBBCC";
    for (std::size_t c = 0; c < types.size(); ++c) {
        std::size_t rank = 1;
        if (types[c] == 'A') rank = 2 + (c * 4) % 19;
        if (types[c] == 'B') rank = 2 + (c * 7) % 19;
        plan.push_back({"abl_" + std::to_string(c), types[c], rank});
    }

    // Per case, an explicit stage-1 order of the head of the ranking.
    const std::size_t dim = plan.size() + 1;
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < plan.size(); ++c) {
        const std::size_t t = (c * 11 + 5) % n;
        const Attrs& target = w->images[t];
        std::vector<std::size_t> others;  // differ in object or color
        std::vector<std::size_t> variants;  // same object and color, other scene
        for (std::size_t j = 0; j < n; ++j) {
            if (j == t) continue;
            const Attrs& a = w->images[j];
            (a.object == target.object && a.color == target.color ? variants : others).push_back(j);
        }
        std::shuffle(others.begin(), others.end(), rng);
        std::vector<std::size_t> head;
        const std::size_t above = plan[c].target_stage1_rank - 1;
        if (plan[c].type == 'B') {
            head.push_back(variants[0]);
            for (std::size_t i = 0; i + 1 < above; ++i) head.push_back(others[i]);
        } else {
            for (std::size_t i = 0; i < above; ++i) head.push_back(others[i]);
        }
        head.push_back(t);
        for (std::size_t i = head.size(); i < 21; ++i) head.push_back(others[i]);
        for (std::size_t p = 0; p < head.size(); ++p) rows[head[p]][c] = 0.20 - 0.005 * static_cast<double>(p);

        BenchmarkCase bc;
        bc.id = plan[c].id;
        bc.query = {QueryKind::TIR, describe(target) + " (q" + std::to_string(c) + ")", std::nullopt, {}};
        bc.ground_truth = {image_id(target)};
        w->cases.push_back(std::move(bc));
    }
    // Pad every row to unit norm through the last coordinate so each score
    // equals the planned weight.
    std::map<std::string, std::vector<float>> by_id;
    for (std::size_t j = 0; j < n; ++j) {
        double sq = 0.0;
        for (std::size_t c = 0; c + 1 < dim; ++c) sq += rows[j][c] * rows[j][c];
        rows[j][dim - 1] = std::sqrt(1.0 - sq);
        by_id[image_id(w->images[j])] = normalized(rows[j]);
    }

    w->backend->on_chat(BackendRole::Captioner, [](const ChatRequest& req) {
        for (const auto& m : req.messages) {
            for (const auto& p : m.parts) {
                if (p.kind != ContentPart::Kind::Image) continue;
                if (auto a = attrs_of_bytes(p.image.bytes)) return describe(*a) + " #" + image_id(*a);
            }
        }
        return std::string("an unknown picture");
    });
    w->backend->on_embed(BackendRole::ImageEncoder, [by_id](const EmbedRequest& req) {
        return by_id.at(image_id(attrs_of_bytes(req.image.bytes).value()));
    });
    w->backend->on_embed(BackendRole::TextEncoder, [by_id, dim](const EmbedRequest& req) {
        if (const auto hash = req.text.find(" #"); hash != std::string::npos) return by_id.at(req.text.substr(hash + 2));
        std::vector<double> v(dim, 0.0);
        static const std::regex kTag(R"(\(q(\d+)\))");
        std::smatch m;
        if (std::regex_search(req.text, m, kTag)) {
            v[std::stoul(m[1].str())] = 1.0;
        } else {
            v[dim - 1] = 1.0;
        }
        return normalized(v);
    });
    w->build_index();
    if (plan_out) *plan_out = plan;
    return w;
}

}  // namespace synth
