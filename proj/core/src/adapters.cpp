#include "lgir/adapters.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "lgir/text.hpp"

namespace lgir {

using nlohmann::json;

namespace {

std::string new_session_id() {
    static std::mutex mutex;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mutex);
    constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    auto bits = rng();
    for (int i = 0; i < 16; ++i, bits >>= 4) id.push_back(kHex[bits & 0xf]);
    return id;
}

bool valid_session_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    }
    return true;
}

std::string chat_evaluator_instruction(const std::vector<std::string>& dialog, std::string_view feedback) {
    std::string out;
    for (const auto& turn : dialog) {
        out += std::string(text::trim(turn));
        out += "; ";
    }
    out += std::string(text::trim(feedback));
    return out;
}

}  // namespace

std::vector<std::string> Session::dialog() const {
    std::vector<std::string> out;
    for (const auto& r : rounds) out.push_back(r.user_text);
    return out;
}

void to_json(json& j, const SessionRound& v) {
    j = json{{"user_text", v.user_text},         {"ref_desc", v.ref_desc},
             {"atomic_instructions", v.atomic_instructions}, {"descriptions", v.descriptions},
             {"stage1_top", v.stage1_top},       {"final_ranking", v.final_ranking}};
}

void from_json(const json& j, SessionRound& v) {
    v.user_text = j.at("user_text").get<std::string>();
    v.ref_desc = j.value("ref_desc", std::string{});
    v.atomic_instructions = j.value("atomic_instructions", std::vector<AtomicInstruction>{});
    v.descriptions = j.value("descriptions", TargetDescriptions{});
    v.stage1_top = j.value("stage1_top", std::vector<std::string>{});
    v.final_ranking = j.at("final_ranking").get<RankedList>();
}

void to_json(json& j, const Session& v) {
    j = json{{"session_id", v.session_id},
             {"kind", v.kind},
             {"rounds", v.rounds},
             {"current_ref_desc", v.current_ref_desc}};
}

void from_json(const json& j, Session& v) {
    v.session_id = j.at("session_id").get<std::string>();
    v.kind = j.at("kind").get<QueryKind>();
    v.rounds = j.value("rounds", std::vector<SessionRound>{});
    v.current_ref_desc = j.value("current_ref_desc", std::string{});
}

AdaptedQuery adapt_tir(std::string_view text) {
    if (text::is_blank(text)) throw Error(ErrorCode::EmptyText, "query text is empty", "validate");
    return {std::string(text), std::string(kBlankReference)};
}

AdaptedQuery adapt_cir(std::string_view instruction, const ImageRecord& reference, const ImagePart& part,
                       const EngineContext& ctx) {
    if (text::is_blank(instruction)) throw Error(ErrorCode::EmptyText, "instruction is empty", "validate");
    ImageRecord keyed = reference;
    if (keyed.content_hash.empty()) {
        keyed.content_hash = part.bytes.empty() ? sha256_hex("uri:" + part.uri) : sha256_hex(part.bytes);
    }
    try {
        const auto caption = caption_image(keyed, part.bytes, ctx.gateway, ctx.cache, sampling_from(ctx.config));
        return {std::string(instruction), caption.text};
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), "caption");
    }
}

AdaptedQuery adapt_chatir(const Session& session, std::string_view feedback) {
    if (text::is_blank(feedback)) throw Error(ErrorCode::EmptyText, "feedback is empty", "validate");
    if (session.rounds.empty() || session.current_ref_desc.empty()) {
        return {std::string(feedback), std::string(kBlankReference)};
    }
    return {std::string(feedback), session.current_ref_desc};
}

void record_round(Session& session, const std::string& user_text, const AdaptedQuery& adapted,
                  const PipelineOutput& output, const EmbeddingIndex& index, ChatReference mode,
                  std::size_t keep) {
    SessionRound round;
    round.user_text = user_text;
    round.ref_desc = adapted.ref_desc;
    round.atomic_instructions = output.stage1.atomic_instructions;
    round.descriptions = output.stage1.descriptions;
    const auto& s1 = output.stage1.ranking.entries;
    for (std::size_t i = 0; i < std::min(keep, s1.size()); ++i) round.stage1_top.push_back(s1[i].image_id);
    round.final_ranking = output.ranking;
    if (round.final_ranking.entries.size() > keep) round.final_ranking.entries.resize(keep);

    if (mode == ChatReference::Top1Caption && !output.ranking.entries.empty()) {
        const auto& top = index.record(output.ranking.entries.front().image_id);
        session.current_ref_desc = top.caption.value_or(output.stage1.descriptions.comprehensive_synthesis);
    } else {
        session.current_ref_desc = output.stage1.descriptions.comprehensive_synthesis;
    }
    session.rounds.push_back(std::move(round));
}

SessionStore::SessionStore(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
    if (dir_) std::filesystem::create_directories(*dir_);
}

std::filesystem::path SessionStore::file_for(const std::string& session_id) const {
    return *dir_ / (session_id + ".json");
}

Session SessionStore::create(QueryKind kind) {
    Session s;
    s.kind = kind;
    s.session_id = new_session_id();
    save(s);
    return s;
}

bool SessionStore::exists(const std::string& session_id) const {
    if (!valid_session_id(session_id)) return false;
    std::lock_guard lock(mutex_);
    if (memory_.count(session_id)) return true;
    return dir_ && std::filesystem::exists(file_for(session_id));
}

Session SessionStore::load(const std::string& session_id) const {
    if (!valid_session_id(session_id)) {
        throw Error(ErrorCode::SessionNotFound, "no session '" + session_id + "'");
    }
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(session_id); it != memory_.end()) return it->second;
    if (dir_) {
        std::ifstream in(file_for(session_id));
        if (in) {
            std::ostringstream ss;
            ss << in.rdbuf();
            auto j = json::parse(ss.str(), nullptr, false);
            if (j.is_discarded()) throw Error(ErrorCode::ParseError, "session file is not JSON: " + session_id);
            return j.get<Session>();
        }
    }
    throw Error(ErrorCode::SessionNotFound, "no session '" + session_id + "'");
}

void SessionStore::save(const Session& session) {
    if (!valid_session_id(session.session_id)) {
        throw Error(ErrorCode::InvalidArgument, "invalid session id '" + session.session_id + "'");
    }
    std::lock_guard lock(mutex_);
    if (!dir_) {
        memory_[session.session_id] = session;
        return;
    }
    const auto path = file_for(session.session_id);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << json(session).dump(2) << '\n';
        if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write session file " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::mutex& SessionStore::lock_for(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    auto& slot = locks_[session_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

QueryResult run_query(const RetrievalQuery& query, const EmbeddingIndex& index, const EngineContext& ctx,
                      Stage last, Session* session, const std::optional<ImagePart>& reference) {
    ctx.config.validate();
    const auto keep = static_cast<std::size_t>(ctx.config.response_top_k);

    if (query.kind == QueryKind::ChatIR) {
        if (text::is_blank(query.text)) throw Error(ErrorCode::EmptyText, "feedback is empty", "validate");
        Session scratch;
        scratch.session_id = "scratch";
        Session& s = session ? *session : scratch;
        if (!session) {
            for (const auto& turn : query.dialog) run_query({QueryKind::ChatIR, turn, {}, {}}, index, ctx, last, &s);
        }
        QueryResult result;
        result.adapted = adapt_chatir(s, query.text);
        PipelineInput input{result.adapted.instruction, result.adapted.ref_desc, std::nullopt,
                            chat_evaluator_instruction(s.dialog(), query.text)};
        result.output = run_pipeline(input, index, ctx, last);
        record_round(s, query.text, result.adapted, result.output, index, ctx.config.chat_ref, keep);
        return result;
    }

    require_valid(query);
    QueryResult result;
    PipelineInput input;
    if (query.kind == QueryKind::TIR) {
        result.adapted = adapt_tir(query.text);
    } else {
        const auto part = reference ? *reference : image_part(*query.reference_image, ctx.images);
        result.adapted = adapt_cir(query.text, *query.reference_image, part, ctx);
        input.reference = part;
    }
    input.instruction = result.adapted.instruction;
    input.ref_desc = result.adapted.ref_desc;
    result.output = run_pipeline(input, index, ctx, last);
    if (session) record_round(*session, query.text, result.adapted, result.output, index, ctx.config.chat_ref, keep);
    return result;
}

}  // namespace lgir
