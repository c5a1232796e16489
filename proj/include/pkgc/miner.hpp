#pragma once
// Exact top-n_c mining of unvisited candidate facts.
//
// Queries (h, r) are enumerated for forward and reciprocal relation ids; a
// reciprocal query (e, r + |R|) proposes the canonical facts (x, r, e).
// A canonical fact reachable from both directions is scored by the larger
// of its two directional scores. Results are ordered by descending score,
// ties by ascending packed id, and equal those of a full enumeration.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pkgc/errors.hpp"
#include "pkgc/kg_store.hpp"
#include "pkgc/kge/model.hpp"
#include "pkgc/triple.hpp"

namespace pkgc {

// Observed (class(h), r) and (r, class(t)) pairings of the known graph.
// Entities without a class are never constrained.
class SemanticValidityFilter {
public:
    SemanticValidityFilter() = default;

    SemanticValidityFilter(const FactSet& known, const ClassDict& classes, std::size_t n_entities)
        : class_of_(n_entities) {
        for (std::size_t e = 0; e < n_entities; ++e) class_of_[e] = classes.class_of(static_cast<EntityId>(e));
        for (auto key : known.keys()) {
            const auto f = unpack(key);
            if (auto c = class_of(f.head)) head_pairs_.insert(pair_key(*c, f.relation));
            if (auto c = class_of(f.tail)) tail_pairs_.insert(pair_key(f.relation, *c));
        }
    }

    [[nodiscard]] std::optional<ClassId> class_of(EntityId e) const {
        return e < class_of_.size() ? class_of_[e] : std::nullopt;
    }

    // May `h` head a fact of forward relation r?
    [[nodiscard]] bool head_ok(EntityId h, RelationId r) const {
        auto c = class_of(h);
        return !c || head_pairs_.contains(pair_key(*c, r));
    }

    // May `t` be the tail of a fact of forward relation r?
    [[nodiscard]] bool tail_ok(RelationId r, EntityId t) const {
        auto c = class_of(t);
        return !c || tail_pairs_.contains(pair_key(r, *c));
    }

    [[nodiscard]] bool passes(const Triple& f) const { return head_ok(f.head, f.relation) && tail_ok(f.relation, f.tail); }

    [[nodiscard]] bool has_head_pair(ClassId c, RelationId r) const { return head_pairs_.contains(pair_key(c, r)); }
    [[nodiscard]] bool has_tail_pair(RelationId r, ClassId c) const { return tail_pairs_.contains(pair_key(r, c)); }
    [[nodiscard]] std::size_t num_head_pairs() const noexcept { return head_pairs_.size(); }
    [[nodiscard]] std::size_t num_tail_pairs() const noexcept { return tail_pairs_.size(); }

    // Fraction of `facts` passing the filter.
    [[nodiscard]] double cover_rate(const FactSet& facts) const {
        if (facts.empty()) return 1.0;
        std::size_t pass = 0;
        for (auto key : facts.keys()) pass += passes(unpack(key)) ? 1 : 0;
        return static_cast<double>(pass) / static_cast<double>(facts.size());
    }

private:
    static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    std::vector<std::optional<ClassId>> class_of_;
    std::unordered_set<std::uint64_t> head_pairs_;
    std::unordered_set<std::uint64_t> tail_pairs_;
};

inline SemanticValidityFilter build_svf(const FactSet& known, const ClassDict& classes, std::size_t n_entities) {
    return SemanticValidityFilter(known, classes, n_entities);
}

struct Query {
    EntityId entity;
    RelationId relation;  // in [0, 2|R|)

    friend bool operator==(const Query&, const Query&) = default;
};

// Canonical fact proposed by candidate `x` for query (e, rel).
inline Triple canonical(const Query& q, EntityId x, std::size_t n_relations) {
    if (q.relation < n_relations) return Triple{q.entity, q.relation, x};
    return Triple{x, static_cast<RelationId>(q.relation - n_relations), q.entity};
}

// Valid queries in ascending (relation, entity) order. Forward queries need
// (class(h), r) among the head pairs, reciprocal queries (e, r') need
// (r, class(e)) among the tail pairs. With no filter every pair is valid.
inline std::vector<Query> valid_queries(const SemanticValidityFilter* svf, std::size_t n_entities,
                                        std::size_t n_relations) {
    std::vector<Query> out;
    out.reserve(svf ? 0 : n_entities * 2 * n_relations);
    for (RelationId rel = 0; rel < 2 * n_relations; ++rel) {
        const bool forward = rel < n_relations;
        const auto base = static_cast<RelationId>(forward ? rel : rel - n_relations);
        for (EntityId e = 0; e < n_entities; ++e) {
            if (svf && !(forward ? svf->head_ok(e, base) : svf->tail_ok(base, e))) continue;
            out.push_back({e, rel});
        }
    }
    return out;
}

struct Candidate {
    double score = -std::numeric_limits<double>::infinity();
    PackedTriple key = std::numeric_limits<PackedTriple>::max();

    [[nodiscard]] bool is_dummy() const noexcept { return key == std::numeric_limits<PackedTriple>::max(); }
    [[nodiscard]] Triple triple() const noexcept { return unpack(key); }
};

// Total order used everywhere: higher score first, then lower packed id.
inline bool ranks_before(const Candidate& a, const Candidate& b) noexcept {
    return a.score > b.score || (a.score == b.score && a.key < b.key);
}

// Fixed-capacity min-heap seeded with dummy entries of score -inf. The root
// is the worst entry under ranks_before. Entries are replaced, never added,
// and a position index lets a fact already present take a higher score.
class CandidateHeap {
public:
    explicit CandidateHeap(std::size_t capacity) : entries_(capacity) { pos_.reserve(capacity); }

    [[nodiscard]] std::size_t capacity() const noexcept { return entries_.size(); }
    [[nodiscard]] const Candidate& root() const { return entries_.front(); }
    [[nodiscard]] bool contains(PackedTriple key) const { return pos_.contains(key); }

    // Returns true when the heap changed.
    bool offer(double score, PackedTriple key) {
        if (entries_.empty()) return false;
        if (auto it = pos_.find(key); it != pos_.end()) {
            auto& existing = entries_[it->second];
            if (!(score > existing.score)) return false;
            existing.score = score;
            sift_down(it->second);
            return true;
        }
        const Candidate incoming{score, key};
        if (!ranks_before(incoming, entries_.front())) return false;
        if (!entries_.front().is_dummy()) pos_.erase(entries_.front().key);
        entries_.front() = incoming;
        pos_[key] = 0;
        sift_down(0);
        return true;
    }

    // Non-dummy entries, best first.
    [[nodiscard]] std::vector<Candidate> ranked() const {
        std::vector<Candidate> out;
        out.reserve(pos_.size());
        for (const auto& c : entries_)
            if (!c.is_dummy()) out.push_back(c);
        std::sort(out.begin(), out.end(), ranks_before);
        return out;
    }

    // Heap property and index consistency; for tests.
    [[nodiscard]] bool valid() const {
        std::size_t real = 0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            for (std::size_t c : {2 * i + 1, 2 * i + 2})
                if (c < entries_.size() && ranks_before(entries_[i], entries_[c])) return false;
            if (!entries_[i].is_dummy()) {
                ++real;
                auto it = pos_.find(entries_[i].key);
                if (it == pos_.end() || it->second != i) return false;
            }
        }
        return real == pos_.size();
    }

private:
    // Moves a worsened-relative-to-children entry toward the leaves. Entries
    // only ever improve, so sifting down is the only direction needed.
    void sift_down(std::size_t i) {
        const std::size_t n = entries_.size();
        while (true) {
            std::size_t worst = i;
            const std::size_t l = 2 * i + 1, r = l + 1;
            if (l < n && ranks_before(entries_[worst], entries_[l])) worst = l;
            if (r < n && ranks_before(entries_[worst], entries_[r])) worst = r;
            if (worst == i) return;
            std::swap(entries_[i], entries_[worst]);
            reindex(i);
            reindex(worst);
            i = worst;
        }
    }

    void reindex(std::size_t i) {
        if (!entries_[i].is_dummy()) pos_[entries_[i].key] = i;
    }

    std::vector<Candidate> entries_;
    std::unordered_map<PackedTriple, std::size_t> pos_;
};

struct MiningConfig {
    std::size_t n_c = 1000;
    std::size_t b_m_max = 10000;
    bool warm_up = true;
    bool root_filter = true;
    bool svf = true;
    bool svf_tails = true;  // also filter candidates inside a valid query
};

struct BatchStats {
    std::size_t index = 0;
    std::size_t batch_size = 0;  // queries
    std::size_t candidates = 0;  // scored, SVF-valid candidates
    std::size_t survivors = 0;   // passed the root filter
    std::size_t replacements = 0;
    double pass_rate = 1.0;
    double root_score = 0.0;  // after the batch
    double wall_ms = 0.0;
};

struct MiningStats {
    std::vector<BatchStats> batches;
    std::size_t queries = 0;
    std::size_t candidates = 0;
    std::size_t survivors = 0;
    std::size_t heap_replacements = 0;
    std::size_t visited_probes = 0;
    bool short_result = false;  // fewer than n_c unvisited valid candidates existed
    double wall_ms = 0.0;
};

struct MiningResult {
    std::vector<Candidate> ranked;
    MiningStats stats;

    [[nodiscard]] FactSet facts() const {
        FactSet out;
        for (const auto& c : ranked) out.insert_packed(c.key);
        return out;
    }
};

inline void write_mining_stats_header(std::ostream& out) {
    out << "step,batch_index,batch_size,pass_rate,heap_replacements,wall_ms\n";
}

inline void write_mining_stats(std::ostream& out, std::size_t step, const MiningStats& stats) {
    char buf[200];
    for (const auto& b : stats.batches) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.6f,%zu,%.3f\n", step, b.index, b.batch_size, b.pass_rate,
                      b.replacements, b.wall_ms);
        out << buf;
    }
}

namespace detail {

// Per relation id, which candidate entities the filter admits.
inline std::vector<std::vector<std::uint8_t>> candidate_masks(const SemanticValidityFilter& svf,
                                                              std::size_t n_entities, std::size_t n_relations) {
    std::vector<std::vector<std::uint8_t>> masks(2 * n_relations, std::vector<std::uint8_t>(n_entities));
    for (RelationId r = 0; r < n_relations; ++r) {
        for (EntityId x = 0; x < n_entities; ++x) {
            masks[r][x] = svf.tail_ok(r, x) ? 1 : 0;
            masks[r + n_relations][x] = svf.head_ok(x, r) ? 1 : 0;
        }
    }
    return masks;
}

}  // namespace detail

// Batched heap mining. Batches are slices of the valid query list; with
// warm-up their size starts at 1 and doubles up to b_m_max, otherwise it is
// b_m_max throughout. With the root filter on, candidates scoring below the
// root at the start of the batch are dropped before any visited probe.
template <typename Real>
MiningResult mine(const EmbeddingModel<Real>& model, const FactSet& visited, const SemanticValidityFilter* svf,
                  const MiningConfig& cfg) {
    if (cfg.b_m_max == 0) throw ConfigError("b_m_max must be at least 1");
    const auto t_start = std::chrono::steady_clock::now();
    MiningResult result;
    auto& stats = result.stats;
    if (cfg.n_c == 0) return result;

    const std::size_t n_entities = model.num_entities();
    const std::size_t n_relations = model.num_relations();
    const SemanticValidityFilter* filter = cfg.svf ? svf : nullptr;
    const auto queries = valid_queries(filter, n_entities, n_relations);
    stats.queries = queries.size();
    std::vector<std::vector<std::uint8_t>> masks;
    if (filter && cfg.svf_tails) masks = detail::candidate_masks(*filter, n_entities, n_relations);

    CandidateHeap heap(cfg.n_c);
    std::vector<Real> scores(n_entities);
    struct Survivor {
        double score;
        PackedTriple key;
    };
    std::vector<Survivor> survivors;
    constexpr std::size_t kFlushAt = std::size_t{1} << 20;

    auto drain = [&](BatchStats& b) {
        for (const auto& s : survivors) {
            ++stats.visited_probes;
            if (visited.contains_packed(s.key)) continue;
            if (heap.offer(s.score, s.key)) ++b.replacements;
        }
        survivors.clear();
    };

    std::size_t batch_size = cfg.warm_up ? 1 : cfg.b_m_max;
    std::size_t begin = 0;
    std::size_t index = 0;
    while (begin < queries.size()) {
        const auto t_batch = std::chrono::steady_clock::now();
        const std::size_t end = std::min(queries.size(), begin + batch_size);
        BatchStats b;
        b.index = index;
        b.batch_size = end - begin;
        const double threshold = heap.root().score;
        for (std::size_t qi = begin; qi < end; ++qi) {
            const Query& q = queries[qi];
            model.score_tails(q.entity, q.relation, std::span<Real>(scores));
            const std::uint8_t* mask = masks.empty() ? nullptr : masks[q.relation].data();
            for (EntityId x = 0; x < n_entities; ++x) {
                if (mask && !mask[x]) continue;
                ++b.candidates;
                const double s = static_cast<double>(scores[x]);
                if (cfg.root_filter && s < threshold) continue;
                survivors.push_back({s, pack(canonical(q, x, n_relations))});
            }
            if (survivors.size() >= kFlushAt) {
                b.survivors += survivors.size();
                drain(b);
            }
        }
        b.survivors += survivors.size();
        drain(b);
        b.pass_rate = b.candidates ? static_cast<double>(b.survivors) / static_cast<double>(b.candidates) : 1.0;
        b.root_score = heap.root().score;
        b.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_batch).count();
        stats.candidates += b.candidates;
        stats.survivors += b.survivors;
        stats.heap_replacements += b.replacements;
        stats.batches.push_back(b);

        begin = end;
        ++index;
        if (cfg.warm_up) batch_size = std::min(cfg.b_m_max, 2 * batch_size);
    }

    result.ranked = heap.ranked();
    stats.short_result = result.ranked.size() < cfg.n_c;
    stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

inline constexpr std::size_t kNaiveGuard = 100'000'000;

// Reference miner: scores every valid candidate, keeps the best score per
// canonical fact, sorts, and truncates. Refuses candidate spaces above
// `guard` entries.
template <typename Real>
std::vector<Candidate> mine_naive(const EmbeddingModel<Real>& model, const FactSet& visited, std::size_t n_c,
                                  const SemanticValidityFilter* svf = nullptr, bool svf_tails = true,
                                  std::size_t guard = kNaiveGuard) {
    if (n_c == 0) return {};
    const std::size_t n_entities = model.num_entities();
    const std::size_t n_relations = model.num_relations();
    const auto queries = valid_queries(svf, n_entities, n_relations);
    if (queries.size() * n_entities > guard)
        throw ConfigError("candidate space of " + std::to_string(queries.size() * n_entities) +
                          " exceeds the naive miner guard of " + std::to_string(guard));
    std::unordered_map<PackedTriple, double> best;
    std::vector<Real> scores(n_entities);
    for (const auto& q : queries) {
        model.score_tails(q.entity, q.relation, std::span<Real>(scores));
        for (EntityId x = 0; x < n_entities; ++x) {
            const Triple f = canonical(q, x, n_relations);
            if (svf && svf_tails && !svf->passes(f)) continue;
            const PackedTriple key = pack(f);
            if (visited.contains_packed(key)) continue;
            const double s = static_cast<double>(scores[x]);
            auto [it, inserted] = best.try_emplace(key, s);
            if (!inserted && s > it->second) it->second = s;
        }
    }
    std::vector<Candidate> all;
    all.reserve(best.size());
    for (const auto& [key, s] : best) all.push_back({s, key});
    std::sort(all.begin(), all.end(), ranks_before);
    if (all.size() > n_c) all.resize(n_c);
    return all;
}

// Uniformly random unvisited (and, with a filter, valid) canonical facts;
// the baseline a trained miner must beat.
inline FactSet mine_random(const FactSet& visited, std::size_t n_c, std::size_t n_entities, std::size_t n_relations,
                           std::uint64_t seed, const SemanticValidityFilter* svf = nullptr) {
    FactSet out;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<EntityId> pick_e(0, static_cast<EntityId>(n_entities - 1));
    std::uniform_int_distribution<RelationId> pick_r(0, static_cast<RelationId>(n_relations - 1));
    const std::size_t max_attempts = 1000 * std::max<std::size_t>(n_c, 1);
    for (std::size_t attempt = 0; attempt < max_attempts && out.size() < n_c; ++attempt) {
        const Triple f{pick_e(rng), pick_r(rng), pick_e(rng)};
        if (visited.contains(f) || (svf && !svf->passes(f))) continue;
        out.insert(f);
    }
    return out;
}

}  // namespace pkgc
