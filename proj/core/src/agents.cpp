#include "chartinsight/agents.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "chartinsight/error.hpp"

namespace chartinsight {

using nlohmann::json;

// ---- config & transcript --------------------------------------------------------

void PipelineConfig::validate() const {
    if (vote_candidates < 3 || vote_candidates % 2 == 0)
        throw Error(ErrorCode::ValidationError,
                    "vote_candidates must be odd and at least 3 (got " + std::to_string(vote_candidates) + ")");
    if (max_refine_iters < 1)
        throw Error(ErrorCode::ValidationError,
                    "max_refine_iters must be at least 1 (got " + std::to_string(max_refine_iters) + ")");
    if (temperature < 0) throw Error(ErrorCode::ValidationError, "temperature must be >= 0");
}

Transcript::Transcript(const Transcript& other) : events_(other.events()) {}

Transcript& Transcript::operator=(const Transcript& other) {
    if (this != &other) {
        auto copy = other.events();
        std::lock_guard lock(mu_);
        events_ = std::move(copy);
    }
    return *this;
}

void Transcript::append(TranscriptEvent e) {
    std::lock_guard lock(mu_);
    e.seq = events_.size();
    events_.push_back(std::move(e));
}

std::vector<TranscriptEvent> Transcript::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

std::size_t Transcript::backend_calls() const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [](const TranscriptEvent& e) { return e.backend_call; }));
}

json Transcript::to_json() const {
    json out = json::array();
    for (const auto& e : events()) {
        json j{{"seq", e.seq},
               {"stage", e.stage},
               {"agent", e.agent},
               {"backend_call", e.backend_call},
               {"timestamp_ms", e.timestamp_ms}};
        if (!e.request_digest.empty()) j["request_digest"] = e.request_digest;
        if (!e.response_digest.empty()) j["response_digest"] = e.response_digest;
        if (!e.records.is_null()) j["records"] = e.records;
        if (!e.verdicts.is_null()) j["verdicts"] = e.verdicts;
        out.push_back(std::move(j));
    }
    return {{"events", out}};
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void note(Transcript* t, std::string stage, std::string agent, json records, json verdicts = nullptr) {
    if (!t) return;
    TranscriptEvent e;
    e.stage = std::move(stage);
    e.agent = std::move(agent);
    e.records = std::move(records);
    e.verdicts = std::move(verdicts);
    e.timestamp_ms = now_ms();
    t->append(std::move(e));
}

// Logs every call it forwards.
class Recorder final : public Backend {
public:
    Recorder(Backend& inner, Transcript* t, std::string stage) : inner_(inner), t_(t), stage_(std::move(stage)) {}

    GenResponse complete(const GenRequest& req) override {
        TranscriptEvent e;
        e.stage = stage_;
        e.agent = std::string(to_string(req.tag));
        e.backend_call = true;
        e.request_digest = sha256_hex(req.role_prompt + "\n" + req.user_prompt);
        e.timestamp_ms = now_ms();
        try {
            auto r = inner_.complete(req);
            e.response_digest = sha256_hex(r.text);
            if (t_) t_->append(std::move(e));
            return r;
        } catch (const Error& err) {
            e.records = {{"error", std::string(to_string(err.code()))}};
            if (t_) t_->append(std::move(e));
            throw;
        }
    }
    bool deterministic() const override { return inner_.deterministic(); }
    std::string id() const override { return inner_.id(); }

private:
    Backend& inner_;
    Transcript* t_;
    std::string stage_;
};

std::string ask(Backend& b, const PipelineConfig& cfg, AgentTag tag, const json& payload, std::uint64_t seed,
                double temperature) {
    GenRequest req;
    req.tag = tag;
    req.role_prompt = cfg.prompts.role(tag);
    req.user_prompt = build_user_prompt(cfg.prompts.instructions(tag), payload);
    req.seed = seed;
    req.temperature = temperature;
    return b.complete(req).text;
}

std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool replace_first(std::string& s, const std::string& from, const std::string& to) {
    if (from.empty()) return false;
    auto pos = s.find(from);
    if (pos == std::string::npos) return false;
    s.replace(pos, from.size(), to);
    return true;
}

std::string join_sentences(const std::vector<std::string>& ss) {
    std::string out;
    for (const auto& s : ss) out += (out.empty() ? "" : " ") + s;
    return out;
}

struct Checked {
    Claim claim;
    Verdict verdict;
};

std::vector<Checked> check_rule_based(const std::string& sentence, std::size_t index, const ChartFacts& facts,
                                      const std::vector<std::string>& defaults) {
    std::vector<Checked> out;
    for (auto& c :
         claims_from_json(extract_claims_rule_based(sentence, facts.data.dimension_names()), facts, index, defaults))
        out.push_back({c, verify(c, facts)});
    return out;
}

json verdicts_json(const std::vector<Checked>& cs, const TimeSeriesDataset& data) {
    json out = json::array();
    for (const auto& c : cs) out.push_back({{"claim", to_json(c.claim, data)}, {"verdict", to_json(c.verdict)}});
    return out;
}

}  // namespace

// ---- uni ------------------------------------------------------------------------

std::vector<UniResult> run_uni_insighter(const BoundChart& chart, const ChartFacts& facts, const PipelineConfig& cfg,
                                         Backend& backend, Transcript* transcript) {
    std::vector<UniResult> out;
    for (const auto& dim : chart.data.dimension_names()) {
        UniResult r;
        r.record = uni_insight(facts.data, dim, facts.cfg);
        r.record.patches = facts.patches.at(dim);
        const json payload{{"task", "verbalize"},
                           {"record", to_json(r.record)},
                           {"reference_range", facts.max_patch_range},
                           {"significance_ratio", facts.cfg.significance_ratio}};
        note(transcript, "brainstorming", "uni", {{"dimension", dim}, {"record", payload["record"]}});

        auto failures = [&](const std::string& prose) {
            std::vector<std::pair<std::size_t, Checked>> bad;
            auto sentences = split_sentences(prose);
            std::vector<Checked> all;
            for (std::size_t i = 0; i < sentences.size(); ++i)
                for (auto& c : check_rule_based(sentences[i], i, facts, {dim})) {
                    all.push_back(c);
                    if (c.verdict.status == VerdictStatus::Fail) bad.emplace_back(i, c);
                }
            note(transcript, "brainstorming", "uni", {{"dimension", dim}, {"check", "generation"}},
                 verdicts_json(all, facts.data));
            return bad;
        };

        r.prose = trim(ask(backend, cfg, AgentTag::Uni, payload, cfg.seed, cfg.temperature));
        if (cfg.generation_check) {
            auto bad = failures(r.prose);
            if (!bad.empty()) {
                ++r.regenerations;
                r.prose = trim(ask(backend, cfg, AgentTag::Uni, payload, cfg.seed, cfg.temperature));
                bad = failures(r.prose);
            }
            if (!bad.empty()) {
                auto sentences = split_sentences(r.prose);
                for (const auto& [i, c] : bad)
                    if (!c.claim.value_text.empty() && c.verdict.computed)
                        replace_first(sentences[i], c.claim.value_text, format_number(*c.verdict.computed));
                // Whatever still fails is dropped rather than passed on.
                std::vector<std::string> kept;
                for (std::size_t i = 0; i < sentences.size(); ++i) {
                    bool ok = true;
                    for (const auto& c : check_rule_based(sentences[i], i, facts, {dim}))
                        if (c.verdict.status == VerdictStatus::Fail) ok = false;
                    if (ok) kept.push_back(sentences[i]);
                }
                r.prose = join_sentences(kept);
                r.substituted = true;
                note(transcript, "brainstorming", "uni", {{"dimension", dim}, {"substituted", true}});
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ---- insight tuples & voting ----------------------------------------------------

namespace {

std::vector<TrendPair> spans_of(const PairInsight& p) {
    auto tps = p.trend_pairs;
    std::sort(tps.begin(), tps.end(), [](const TrendPair& a, const TrendPair& b) {
        return std::pair(a.window.first, a.window.last) < std::pair(b.window.first, b.window.last);
    });
    std::vector<TrendPair> out;
    for (const auto& t : tps) {
        if (!out.empty()) {
            auto& s = out.back();
            if (s.window.last == t.window.first && s.kind == t.kind && s.direction_a == t.direction_a &&
                s.direction_b == t.direction_b) {
                s.window.last = t.window.last;
                if (s.gap != t.gap) s.gap.reset();
                continue;
            }
        }
        out.push_back(t);
    }
    return out;
}

bool reportable(const TrendPair& t) {
    if (t.direction_a == Direction::Flat || t.direction_b == Direction::Flat) return false;
    return true;
}

std::string relation_tuple(const PairInsight& p) {
    std::string base = "relation|" + p.dim_a + "|" + p.dim_b + "|";
    if (p.tie_throughout) return base + "tie";
    if (p.relation.kind == RelationKind::Same) return base + "same|" + p.relation.above;
    return base + "contrast|" + std::to_string(p.relation.crossings.size());
}

std::string trend_tuple(const TrendPair& t) {
    return "trend|" + t.dim_a + "|" + t.dim_b + "|" + std::to_string(t.window.first) + "|" +
           std::to_string(t.window.last) + "|" + std::string(to_string(t.kind)) + "|" +
           std::string(to_string(t.direction_a)) + "|" + std::string(to_string(t.direction_b));
}

std::string canonical(const std::set<std::string>& s) {
    std::string out;
    for (const auto& t : s) out += t + "\n";
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace

std::set<std::string> insight_tuples(const MultiInsightRecord& r) {
    std::set<std::string> out;
    for (const auto& p : r.pairs) {
        out.insert(relation_tuple(p));
        for (const auto& s : spans_of(p))
            if (reportable(s)) out.insert(trend_tuple(s));
    }
    return out;
}

std::string_view to_string(VoteRule r) noexcept {
    switch (r) {
        case VoteRule::Majority: return "majority";
        case VoteRule::Agreement: return "agreement";
        case VoteRule::Canonical: return "canonical";
    }
    return "majority";
}

VoteOutcome majority_vote(const std::vector<MultiInsightRecord>& candidates) {
    if (candidates.empty()) throw Error(ErrorCode::ValidationError, "no candidates to vote on");
    const std::size_t n = candidates.size();
    std::vector<std::set<std::string>> sets;
    for (const auto& c : candidates) sets.push_back(insight_tuples(c));

    std::map<std::string, std::size_t> count;
    for (const auto& s : sets) ++count[canonical(s)];
    std::size_t best = 0;
    for (const auto& [_, k] : count) best = std::max(best, k);
    std::vector<std::string> modal;
    for (const auto& [key, k] : count)
        if (k == best) modal.push_back(key);
    if (modal.size() == 1) {
        for (std::size_t i = 0; i < n; ++i)
            if (canonical(sets[i]) == modal[0]) return {i, VoteRule::Majority};
    }

    // Tied modal sets: mean agreement with every other candidate decides.
    std::vector<std::size_t> contenders;
    for (std::size_t i = 0; i < n; ++i)
        if (std::find(modal.begin(), modal.end(), canonical(sets[i])) != modal.end()) contenders.push_back(i);
    std::vector<double> agreement(n, 0.0);
    double top = -1;
    for (auto i : contenders) {
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sum += jaccard(sets[i], sets[j]);
        agreement[i] = n > 1 ? sum / static_cast<double>(n - 1) : 1.0;
        top = std::max(top, agreement[i]);
    }
    std::vector<std::size_t> leaders;
    for (auto i : contenders)
        if (std::fabs(agreement[i] - top) <= 1e-12) leaders.push_back(i);
    std::set<std::string> distinct;
    for (auto i : leaders) distinct.insert(canonical(sets[i]));
    if (distinct.size() == 1) return {leaders.front(), VoteRule::Agreement};

    std::size_t win = leaders.front();
    for (auto i : leaders)
        if (canonical(sets[i]) < canonical(sets[win])) win = i;
    return {win, VoteRule::Canonical};
}

MultiInsightRecord supplement(const MultiInsightRecord& voted, const MultiInsightRecord& computed,
                              const TimeSeriesDataset& data) {
    MultiInsightRecord out = computed;
    for (auto& pair : out.pairs) {
        std::vector<IndexRange> windows;
        for (const auto& t : pair.trend_pairs) windows.push_back(t.window);
        for (const auto& vp : voted.pairs) {
            if (!((vp.dim_a == pair.dim_a && vp.dim_b == pair.dim_b) ||
                  (vp.dim_a == pair.dim_b && vp.dim_b == pair.dim_a)))
                continue;
            for (const auto& t : vp.trend_pairs)
                if (t.window.first < t.window.last && t.window.last < data.size()) windows.push_back(t.window);
        }
        std::sort(windows.begin(), windows.end());
        windows.erase(std::unique(windows.begin(), windows.end()), windows.end());
        pair.trend_pairs.clear();
        for (const auto& w : windows) {
            try {
                pair.trend_pairs.push_back(classify_trend_pair(data, pair.dim_a, pair.dim_b, w));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::WindowEmpty) throw;
            }
        }
    }
    return out;
}

json insight_items(const MultiInsightRecord& r, const TimeSeriesDataset& data, const std::set<std::string>& only) {
    auto wanted = [&](const std::string& tuple) { return only.empty() || only.count(tuple) > 0; };
    auto label = [&](std::size_t i) { return data.display_label(i); };
    json items = json::array();
    for (const auto& p : r.pairs) {
        const std::string rel = relation_tuple(p);
        if (wanted(rel)) {
            if (p.tie_throughout) {
                items.push_back({{"type", "tie"}, {"pair", {p.dim_a, p.dim_b}}, {"tuple", rel}});
            } else if (p.relation.kind == RelationKind::Same) {
                const std::string below = p.relation.above == p.dim_a ? p.dim_b : p.dim_a;
                items.push_back({{"type", "dominance"},
                                 {"above", p.relation.above},
                                 {"below", below},
                                 {"whole", true},
                                 {"tuple", rel}});
            } else if (p.relation.crossings.size() > 3) {
                items.push_back({{"type", "crossings"},
                                 {"pair", {p.dim_a, p.dim_b}},
                                 {"count", p.relation.crossings.size()},
                                 {"tuple", rel}});
            } else {
                for (const auto& d : p.dominance) {
                    if (d.above.empty() || d.window.first >= d.window.last) continue;
                    const std::string below = d.above == p.dim_a ? p.dim_b : p.dim_a;
                    items.push_back({{"type", "dominance"},
                                     {"above", d.above},
                                     {"below", below},
                                     {"start", label(d.window.first)},
                                     {"end", label(d.window.last)},
                                     {"tuple", rel}});
                }
                for (const auto& c : p.relation.crossings) {
                    const bool a_over = c.direction == CrossDirection::AOvertakesB;
                    std::size_t from = c.index, to = c.next_index;
                    if (c.at_sample) {
                        const auto& sa = data.series(p.dim_a);
                        const auto& sb = data.series(p.dim_b);
                        for (std::size_t k = c.index; k-- > 0;)
                            if (sa[k] && sb[k]) {
                                from = k;
                                break;
                            }
                        for (std::size_t k = c.index + 1; k < data.size(); ++k)
                            if (sa[k] && sb[k] && *sa[k] != *sb[k]) {
                                to = k;
                                break;
                            }
                    }
                    items.push_back({{"type", "crossing"},
                                     {"over", a_over ? p.dim_a : p.dim_b},
                                     {"under", a_over ? p.dim_b : p.dim_a},
                                     {"from", label(from)},
                                     {"to", label(to)},
                                     {"tuple", rel}});
                }
            }
        }
        const auto spans = spans_of(p);
        for (std::size_t k = 0; k < spans.size(); ++k) {
            const auto& s = spans[k];
            if (!reportable(s)) continue;
            const std::string tuple = trend_tuple(s);
            if (!wanted(tuple)) continue;
            json item{{"type", "trend"},
                      {"pair", {s.dim_a, s.dim_b}},
                      {"kind", std::string(to_string(s.kind))},
                      {"directions", {std::string(to_string(s.direction_a)), std::string(to_string(s.direction_b))}},
                      {"start", label(s.window.first)},
                      {"end", label(s.window.last)},
                      {"single", s.window.last == s.window.first + 1},
                      {"tuple", tuple}};
            if (k > 0 && spans[k - 1].window.last == s.window.first && spans[k - 1].direction_a == spans[k - 1].direction_b)
                item["after"] = std::string(to_string(spans[k - 1].direction_a));
            items.push_back(std::move(item));
        }
    }
    return items;
}

// ---- multi ----------------------------------------------------------------------

namespace {

struct VoteRound {
    MultiInsightRecord supplemented;
    std::set<std::string> tuples;
    VoteRule rule = VoteRule::Majority;
    bool regenerated = false;
};

VoteRound vote_round(const ChartFacts& facts, const std::map<std::string, std::vector<Patch>>& patches, int round,
                     const char* stage, const PipelineConfig& cfg, Backend& backend, Transcript* transcript) {
    const auto& data = facts.data;
    const auto computed = multi_insight(patches, data, data.full_range());
    const json computed_json = to_json(computed, data);

    auto generate = [&](int offset) {
        std::vector<MultiInsightRecord> cands;
        json seen = json::array();
        for (int i = 0; i < cfg.vote_candidates; ++i) {
            const json payload{{"task", "candidates"}, {"candidate", i}, {"round", round}, {"record", computed_json}};
            const auto text = ask(backend, cfg, AgentTag::Multi, payload,
                                  cfg.seed + static_cast<std::uint64_t>(offset + i), cfg.temperature);
            auto j = json_in_response(text);
            if (!j || !j->contains("record")) continue;
            try {
                cands.push_back(multi_record_from_json((*j)["record"]));
                seen.push_back(canonical(insight_tuples(cands.back())));
            } catch (const Error&) {
            }
        }
        if (cands.empty()) throw Error(ErrorCode::BackendError, "no usable multi-insight candidate");
        note(transcript, stage, "multi", {{"round", round}, {"candidates", seen}});
        return cands;
    };

    VoteRound out;
    auto cands = generate(0);
    auto v = majority_vote(cands);
    if (v.rule == VoteRule::Canonical) {
        out.regenerated = true;
        cands = generate(cfg.vote_candidates);
        v = majority_vote(cands);
    }
    out.rule = v.rule;
    out.supplemented = supplement(cands[v.winner], computed, data);
    out.tuples = insight_tuples(out.supplemented);
    note(transcript, stage, "multi",
         {{"round", round},
          {"vote", std::string(to_string(v.rule))},
          {"winner", v.winner},
          {"tuples", out.tuples}});
    return out;
}

std::string synthesize(const MultiInsightRecord& rec, const TimeSeriesDataset& data, const std::set<std::string>& only,
                       const PipelineConfig& cfg, Backend& backend) {
    json items = insight_items(rec, data, only);
    if (items.empty()) return {};
    return trim(ask(backend, cfg, AgentTag::Multi, {{"task", "synthesize"}, {"insights", items}}, cfg.seed,
                    cfg.temperature));
}

}  // namespace

MultiResult run_multi_insighter(const ChartFacts& facts, const PipelineConfig& cfg, Backend& backend,
                                Transcript* transcript) {
    MultiResult out;
    if (facts.data.dimensions.size() < 2) return out;
    auto v = vote_round(facts, facts.patches, 0, "brainstorming", cfg, backend, transcript);
    out.record = std::move(v.supplemented);
    out.tuples = std::move(v.tuples);
    out.rule = v.rule;
    out.regenerated = v.regenerated;
    out.prose = synthesize(out.record, facts.data, {}, cfg, backend);
    return out;
}

// ---- refining -------------------------------------------------------------------

SegmentationConfig segmentation_at_depth(const SegmentationConfig& base, int depth) {
    SegmentationConfig c = base;
    if (depth <= 1) return c;
    c.merge_patches = false;
    if (depth >= 3) c.prominence_fraction = base.prominence_fraction / std::pow(2.0, depth - 2);
    return c;
}

RefineResult refine_loop(const std::string& draft, const std::set<std::string>& known, const ChartFacts& facts,
                         const PipelineConfig& cfg, Backend& backend, Transcript* transcript) {
    RefineResult out;
    out.text = draft;
    out.tuples = known;
    if (facts.data.dimensions.size() < 2) return out;
    for (int round = 1; round <= cfg.max_refine_iters; ++round) {
        const int depth = round + 1;
        const auto patches = chart_patches(facts.data, segmentation_at_depth(facts.cfg, depth));
        auto v = vote_round(facts, patches, round, "refining", cfg, backend, transcript);
        RefineRound rr{round, depth, {}};
        for (const auto& t : v.tuples)
            if (!out.tuples.count(t)) rr.new_tuples.insert(t);
        out.iterations = round;
        out.rounds.push_back(rr);
        note(transcript, "refining", "multi", {{"round", round}, {"depth", depth}, {"new", rr.new_tuples}});
        if (rr.new_tuples.empty()) break;
        const auto additions = synthesize(v.supplemented, facts.data, rr.new_tuples, cfg, backend);
        out.text = trim(ask(backend, cfg, AgentTag::Writer,
                            {{"task", "integrate"}, {"text", out.text}, {"additions", additions}}, cfg.seed,
                            cfg.temperature));
        out.tuples.insert(rr.new_tuples.begin(), rr.new_tuples.end());
    }
    return out;
}

// ---- self-consistency -----------------------------------------------------------

namespace {

std::optional<std::pair<std::string, std::string>> replacement_for(const Claim& c, const Verdict& v) {
    switch (c.kind()) {
        case ClaimKind::Extremum:
        case ClaimKind::Numeric: {
            if (c.value_text.empty() || !v.computed) return std::nullopt;
            double shown = *v.computed;
            if (c.kind() == ClaimKind::Numeric &&
                std::get<NumericClaim>(c.body).statistic == Statistic::GrowthRate &&
                c.value_text.find('%') != std::string::npos)
                return std::pair{c.value_text, format_number(std::fabs(shown) * 100) + "%"};
            return std::pair{c.value_text, format_number(shown)};
        }
        case ClaimKind::Significance: {
            if (c.word.empty()) return std::nullopt;
            const bool claimed = std::get<SignificanceClaim>(c.body).significant;
            auto w = claimed ? soften_word(c.word) : strengthen_word(c.word);
            if (!w) return std::nullopt;
            return std::pair{c.word, *w};
        }
        default: return std::nullopt;
    }
}

struct SentenceCheck {
    std::string text;
    bool changed = false;
    bool flagged = false;
    std::size_t claims = 0;
    std::size_t failed = 0;
    bool rewritten = false;
    bool substituted = false;
};

// Verify one sentence and repair what fails: the backend rewrites first, then
// the replacements are applied directly.
SentenceCheck check_and_repair(const std::string& text, std::size_t index, const ChartFacts& facts,
                               const std::optional<std::set<ClaimKind>>& kinds, const PipelineConfig& cfg,
                               Backend& backend, Transcript* transcript, const char* stage) {
    SentenceCheck out;
    out.text = text;
    auto run = [&](const std::string& s) {
        auto refs = attach_data_refs(s, facts);
        std::vector<Checked> cs;
        for (auto& c : extract_claims(s, refs, backend, facts, index))
            if (!kinds || kinds->count(c.kind())) cs.push_back({c, verify(c, facts)});
        return cs;
    };
    auto fails = [](const std::vector<Checked>& cs) {
        std::vector<Checked> f;
        for (const auto& c : cs)
            if (c.verdict.status == VerdictStatus::Fail) f.push_back(c);
        return f;
    };
    auto unverifiable = [](const std::vector<Checked>& cs) {
        return std::any_of(cs.begin(), cs.end(),
                           [](const Checked& c) { return c.verdict.status == VerdictStatus::Unverifiable; });
    };

    auto cs = run(text);
    out.claims = cs.size();
    note(transcript, stage, "selfcheck", {{"sentence", index}}, verdicts_json(cs, facts.data));
    auto bad = fails(cs);
    out.failed = bad.size();
    if (bad.empty()) {
        out.flagged = unverifiable(cs);
        return out;
    }

    json repl = json::array();
    for (const auto& c : bad)
        if (auto r = replacement_for(c.claim, c.verdict)) repl.push_back({{"from", r->first}, {"to", r->second}});

    if (!repl.empty()) {
        auto rewritten = trim(ask(backend, cfg, AgentTag::SelfCheck,
                                  {{"task", "rewrite"}, {"sentence", text}, {"replacements", repl}}, cfg.seed, 0.0));
        if (!rewritten.empty() && rewritten != text) {
            auto again = run(rewritten);
            if (fails(again).empty()) {
                out.text = rewritten;
                out.changed = out.rewritten = true;
                out.flagged = unverifiable(again);
                note(transcript, stage, "selfcheck", {{"sentence", index}, {"rewritten", rewritten}},
                     verdicts_json(again, facts.data));
                return out;
            }
        }
        std::string direct = text;
        for (const auto& r : repl) replace_first(direct, r["from"].get<std::string>(), r["to"].get<std::string>());
        if (direct != text) {
            auto again = run(direct);
            if (fails(again).empty()) {
                out.text = direct;
                out.changed = out.substituted = true;
                out.flagged = unverifiable(again);
                note(transcript, stage, "selfcheck", {{"sentence", index}, {"substituted", direct}},
                     verdicts_json(again, facts.data));
                return out;
            }
        }
    }
    out.flagged = true;
    note(transcript, stage, "selfcheck", {{"sentence", index}, {"unrepaired", true}});
    return out;
}

Sentence annotate_one(const std::string& text, std::size_t index, const ChartFacts& facts, const L1Facts& l1,
                      Backend* backend) {
    Sentence s;
    s.index = index;
    s.text = text;
    s.level = classify_level(text, l1, backend);
    s.refs = attach_data_refs(text, facts);
    return s;
}

}  // namespace

SummaryDoc self_consistency(const SummaryDoc& doc, const ChartFacts& facts, const L1Facts& l1,
                            const PipelineConfig& cfg, Backend& backend, Transcript* transcript,
                            SelfCheckReport* report) {
    SummaryDoc out = doc;
    SelfCheckReport rep;
    for (auto& s : out.sentences) {
        auto r = check_and_repair(s.text, s.index, facts, cfg.selfcheck_kinds, cfg, backend, transcript, "selfcheck");
        rep.claims += r.claims;
        rep.failed += r.failed;
        rep.rewritten += r.rewritten;
        rep.substituted += r.substituted;
        if (r.changed) {
            auto flags = s.flags;
            s = annotate_one(r.text, s.index, facts, l1, &backend);
            s.flags = flags;
            s.flags.edited = true;
        }
        if (r.flagged) {
            s.flags.unverifiable = true;
            ++rep.flagged;
        }
    }
    if (report) *report = rep;
    return out;
}

// ---- pipeline -------------------------------------------------------------------

PipelineResult run_pipeline(const BoundChart& chart, const PipelineConfig& cfg, Backend& inner) {
    cfg.validate();
    PipelineResult out;
    Transcript* t = &out.transcript;
    std::string stage;
    auto enter = [&](const char* name) {
        stage = name;
        if (cfg.on_stage) cfg.on_stage(stage);
    };
    enter("brainstorming");
    try {
        Recorder backend(inner, t, stage);
        const ChartFacts facts = analyze(chart.data, cfg.segmentation);
        auto uni = run_uni_insighter(chart, facts, cfg, backend, t);
        auto multi = run_multi_insighter(facts, cfg, backend, t);

        json uni_json = json::array();
        for (const auto& u : uni) uni_json.push_back({{"dimension", u.record.dimension}, {"prose", u.prose}});
        const json draft_payload{{"task", "draft"},
                                 {"title", chart.l1.title},
                                 {"x_label", chart.l1.x_label},
                                 {"y_label", chart.l1.y_label},
                                 {"dimensions", chart.data.dimension_names()},
                                 {"uni", uni_json},
                                 {"multi", multi.prose}};
        out.draft = trim(ask(backend, cfg, AgentTag::Writer, draft_payload, cfg.seed, cfg.temperature));

        enter("refining");
        Recorder refine_backend(inner, t, stage);
        auto refined = refine_loop(out.draft, multi.tuples, facts, cfg, refine_backend, t);
        out.refine_iterations = refined.iterations;

        enter("annotate");
        Recorder annotate_backend(inner, t, stage);
        auto doc = annotate(refined.text, facts, chart.l1, &annotate_backend, DocSource::Pipeline);
        doc.chart_id = chart.l1.title;
        doc.model = inner.id();

        enter("selfcheck");
        Recorder check_backend(inner, t, stage);
        out.summary = self_consistency(doc, facts, chart.l1, cfg, check_backend, t, &out.selfcheck);
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw e.with_stage(stage);
    }
    return out;
}

PipelineResult run_pipeline(std::string_view spec_text, std::string_view csv, const PipelineConfig& cfg,
                            Backend& backend) {
    BoundChart chart;
    try {
        chart = load_chart(spec_text, csv);
    } catch (const Error& e) {
        throw e.with_stage("ingest");
    }
    return run_pipeline(chart, cfg, backend);
}

// ---- chat -----------------------------------------------------------------------

SummaryDoc chat_refine(const SummaryDoc& doc, std::string_view message, const ChartFacts& facts, const L1Facts& l1,
                       const PipelineConfig& cfg, Backend& inner, Transcript* transcript) {
    if (trim(std::string(message)).empty()) return doc;
    Recorder backend(inner, transcript, "chat");

    json sentences = json::array();
    for (const auto& s : doc.sentences) sentences.push_back(s.text);
    json series = json::object();
    for (const auto& dim : facts.data.dimension_names()) {
        json labels = json::array(), values = json::array();
        const auto& s = facts.data.series(dim);
        for (std::size_t i = 0; i < s.size(); ++i) {
            labels.push_back(facts.data.display_label(i));
            values.push_back(s[i] ? json(*s[i]) : json(nullptr));
        }
        series[dim] = {{"labels", labels}, {"values", values}};
    }
    const json payload{{"task", "edit"},
                       {"message", std::string(message)},
                       {"sentences", sentences},
                       {"dimensions", facts.data.dimension_names()},
                       {"series", series},
                       {"reference_range", facts.max_patch_range},
                       {"significance_ratio", facts.cfg.significance_ratio}};
    const auto edited = split_sentences(ask(backend, cfg, AgentTag::Chat, payload, cfg.seed, cfg.temperature));

    SummaryDoc out = doc;
    out.sentences.clear();
    std::vector<bool> used(doc.sentences.size(), false);
    for (const auto& text : edited) {
        std::optional<std::size_t> same;
        for (std::size_t i = 0; i < doc.sentences.size(); ++i)
            if (!used[i] && doc.sentences[i].text == text) {
                same = i;
                break;
            }
        if (same) {
            used[*same] = true;
            out.sentences.push_back(doc.sentences[*same]);
            continue;
        }
        const std::size_t index = out.sentences.size();
        auto r = check_and_repair(text, index, facts, std::nullopt, cfg, backend, transcript, "chat");
        Sentence s = annotate_one(r.text, index, facts, l1, &backend);
        s.flags.edited = true;
        // A data statement with nothing the oracles can check is unverifiable.
        s.flags.unverifiable = r.flagged || (r.claims == 0 && s.level != Level::L1);
        out.sentences.push_back(std::move(s));
    }
    reindex(out);
    ++out.version;
    return out;
}

}  // namespace chartinsight
