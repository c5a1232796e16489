#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "pkgc/miner.hpp"
#include "pkgc/synthetic.hpp"
#include "support/oracles.hpp"

using namespace pkgc;

namespace {

std::vector<PackedTriple> keys_of(const std::vector<Candidate>& c) {
    std::vector<PackedTriple> out;
    for (const auto& x : c) out.push_back(x.key);
    return out;
}

struct Fixture {
    SyntheticKG kg;
    Partition part;
    SemanticValidityFilter svf;
};

Fixture make_fixture(std::uint64_t seed, std::size_t nE = 50, std::size_t nR = 4, double classless = 0.1) {
    SyntheticSpec spec;
    spec.n_entities = nE;
    spec.n_relations = nR;
    spec.n_classes = 5;
    spec.facts_per_relation = 30;
    spec.classless_fraction = classless;
    spec.seed = seed;
    Fixture f{make_synthetic_kg(spec), {}, {}};
    try {
        f.part = partition(f.kg.facts, {0.6, seed});
    } catch (const InfeasibleRatio& e) {
        f.part = partition(f.kg.facts, {e.min_feasible_rho(), seed});
    }
    f.svf = build_svf(f.part.known, f.kg.classes, nE);
    return f;
}

}  // namespace

TEST(CandidateHeap, KeepsBestAndIndexes) {
    CandidateHeap heap(3);
    EXPECT_TRUE(heap.root().is_dummy());
    for (int i = 0; i < 10; ++i) heap.offer(static_cast<double>(i % 7), static_cast<PackedTriple>(i));
    ASSERT_TRUE(heap.valid());
    // Scores 0..6,0,1,2 -> best three are 6 (key 6), 5 (key 5), 4 (key 4).
    EXPECT_EQ(keys_of(heap.ranked()), (std::vector<PackedTriple>{6, 5, 4}));
}

TEST(CandidateHeap, TiesBreakByLowerKey) {
    CandidateHeap heap(2);
    heap.offer(1.0, 30);
    heap.offer(1.0, 10);
    heap.offer(1.0, 20);
    EXPECT_EQ(keys_of(heap.ranked()), (std::vector<PackedTriple>{10, 20}));
}

TEST(CandidateHeap, ScoreOfPresentKeyOnlyRises) {
    CandidateHeap heap(2);
    heap.offer(1.0, 1);
    heap.offer(2.0, 2);
    EXPECT_FALSE(heap.offer(0.5, 1));
    EXPECT_TRUE(heap.offer(3.0, 1));
    ASSERT_TRUE(heap.valid());
    const auto r = heap.ranked();
    EXPECT_EQ(r.front().key, 1u);
    EXPECT_EQ(r.front().score, 3.0);
    EXPECT_EQ(r.size(), 2u);
}

TEST(CandidateHeap, RandomOffersMatchSort) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        CandidateHeap heap(7);
        std::map<PackedTriple, double> best;
        for (int i = 0; i < 200; ++i) {
            const PackedTriple k = rng() % 40;
            const double s = static_cast<double>(rng() % 25);
            heap.offer(s, k);
            auto [it, ins] = best.try_emplace(k, s);
            if (!ins) it->second = std::max(it->second, s);
            ASSERT_TRUE(heap.valid());
        }
        std::vector<Candidate> all;
        for (auto [k, s] : best) all.push_back({s, k});
        std::sort(all.begin(), all.end(), ranks_before);
        all.resize(7);
        EXPECT_EQ(keys_of(heap.ranked()), keys_of(all));
    }
}

TEST(Queries, CanonicalFormOfReciprocal) {
    EXPECT_EQ(canonical(Query{4, 1}, 9, 3), (Triple{4, 1, 9}));
    EXPECT_EQ(canonical(Query{4, 4}, 9, 3), (Triple{9, 1, 4}));
}

TEST(Svf, ObservedPairsOnly) {
    // Classes: 0,1 -> A; 2,3 -> B; 4 classless. Known: (0, r0, 2).
    Vocabulary vocab = Vocabulary::anonymous(5, 2);
    ClassDict classes(5);
    const auto a = classes.intern_class("A"), b = classes.intern_class("B");
    classes.assign(0, a);
    classes.assign(1, a);
    classes.assign(2, b);
    classes.assign(3, b);
    FactSet known;
    known.insert({0, 0, 2});
    const auto svf = build_svf(known, classes, 5);
    EXPECT_TRUE(svf.passes({1, 0, 3}));   // (A, r0) and (r0, B) observed
    EXPECT_FALSE(svf.passes({2, 0, 3}));  // (B, r0) never observed
    EXPECT_FALSE(svf.passes({1, 1, 3}));  // r1 never observed
    EXPECT_TRUE(svf.passes({4, 0, 4}));   // classless entities pass
    EXPECT_EQ(svf.num_head_pairs(), 1u);
    EXPECT_EQ(svf.num_tail_pairs(), 1u);
    FactSet probe;
    probe.insert({1, 0, 3});
    probe.insert({2, 0, 3});
    EXPECT_DOUBLE_EQ(svf.cover_rate(probe), 0.5);
}

TEST(Mine, MatchesBruteForceOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto fx = make_fixture(seed, 25, 3);
        const auto model = oracle::random_model<double>(ModelFamily::ComplEx, 4, 25, 3, seed, 1.0);
        const auto expect = oracle::top_candidates(model, fx.part.known, 40);
        const auto got = mine(model, fx.part.known, nullptr, MiningConfig{40, 16, true, true, false, true});
        ASSERT_EQ(got.ranked.size(), expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            EXPECT_EQ(got.ranked[i].key, expect[i].second) << "seed " << seed << " rank " << i;
            EXPECT_NEAR(got.ranked[i].score, expect[i].first, 1e-12);
        }
    }
}

TEST(Mine, MatchesBruteForceOracleWithSvf) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto fx = make_fixture(seed, 25, 3);
        const auto model = oracle::random_model<double>(ModelFamily::TransE, 4, 25, 3, seed, 1.0);
        const auto expect = oracle::top_candidates(model, fx.part.known, 30, &fx.svf);
        const auto got = mine(model, fx.part.known, &fx.svf, MiningConfig{30, 16, true, true, true, true});
        ASSERT_EQ(got.ranked.size(), expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(got.ranked[i].key, expect[i].second);
    }
}

TEST(Mine, EveryToggleCombinationEqualsNaive) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto fx = make_fixture(seed);
        for (auto fam : {ModelFamily::CP, ModelFamily::RotatE, ModelFamily::UniBiO2}) {
            const auto model = oracle::random_model<float>(fam, 4, 50, 4, seed, 1.0);
            const auto naive = mine_naive(model, fx.part.known, 100);
            const auto naive_svf = mine_naive(model, fx.part.known, 100, &fx.svf);
            for (int mask = 0; mask < 8; ++mask) {
                MiningConfig cfg{100, 32, bool(mask & 1), bool(mask & 2), bool(mask & 4), true};
                const auto got = mine(model, fx.part.known, &fx.svf, cfg);
                const auto& ref = cfg.svf ? naive_svf : naive;
                ASSERT_EQ(got.ranked.size(), ref.size());
                for (std::size_t i = 0; i < ref.size(); ++i) {
                    ASSERT_EQ(got.ranked[i].key, ref[i].key);
                    ASSERT_EQ(got.ranked[i].score, ref[i].score);
                }
            }
        }
    }
}

// Quantized scores make ties common; exactness must survive them.
TEST(Mine, ExactUnderHeavyTies) {
    const auto fx = make_fixture(9, 30, 3);
    auto model = oracle::random_model<double>(ModelFamily::CP, 2, 30, 3, 9, 1.0);
    for (Eigen::Index i = 0; i < model.entities().size(); ++i)
        model.entities().data()[i] = std::round(model.entities().data()[i] * 2) / 2;
    for (Eigen::Index i = 0; i < model.relations().size(); ++i)
        model.relations().data()[i] = std::round(model.relations().data()[i] * 2) / 2;
    const auto naive = mine_naive(model, fx.part.known, 57);
    for (int mask = 0; mask < 4; ++mask) {
        const auto got = mine(model, fx.part.known, nullptr, MiningConfig{57, 8, bool(mask & 1), bool(mask & 2), false, true});
        EXPECT_EQ(keys_of(got.ranked), keys_of(naive)) << mask;
    }
}

TEST(Mine, WarmUpScheduleDoublesToMax) {
    const auto fx = make_fixture(1, 12, 1);
    const auto model = oracle::random_model<float>(ModelFamily::CP, 2, 12, 1, 1);
    // 24 queries with b_m_max = 8: 1, 2, 4, 8, 8, then the remaining 1.
    const auto got = mine(model, fx.part.known, nullptr, MiningConfig{5, 8, true, true, false, true});
    std::vector<std::size_t> sizes;
    for (const auto& b : got.stats.batches) sizes.push_back(b.batch_size);
    EXPECT_EQ(sizes, (std::vector<std::size_t>{1, 2, 4, 8, 8, 1}));
    const auto flat = mine(model, fx.part.known, nullptr, MiningConfig{5, 8, false, true, false, true});
    sizes.clear();
    for (const auto& b : flat.stats.batches) sizes.push_back(b.batch_size);
    EXPECT_EQ(sizes, (std::vector<std::size_t>{8, 8, 8}));
}

TEST(Mine, RootFilterPrunesWithoutChangingOutput) {
    const auto fx = make_fixture(4, 60, 4);
    const auto model = oracle::random_model<float>(ModelFamily::ComplEx, 4, 60, 4, 4, 1.0);
    const auto with = mine(model, fx.part.known, nullptr, MiningConfig{50, 64, true, true, false, true});
    const auto without = mine(model, fx.part.known, nullptr, MiningConfig{50, 64, true, false, false, true});
    EXPECT_EQ(keys_of(with.ranked), keys_of(without.ranked));
    EXPECT_LT(with.stats.survivors, without.stats.survivors);
    EXPECT_EQ(without.stats.survivors, without.stats.candidates);
}

TEST(Mine, ShortResultWhenSpaceExhausted) {
    FactSet visited;
    for (EntityId h = 0; h < 3; ++h)
        for (EntityId t = 0; t < 3; ++t)
            if (!(h == 2 && t == 2)) visited.insert({h, 0, t});
    const auto model = oracle::random_model<float>(ModelFamily::CP, 2, 3, 1, 1);
    const auto got = mine(model, visited, nullptr, MiningConfig{5, 4, true, true, false, true});
    ASSERT_EQ(got.ranked.size(), 1u);
    EXPECT_EQ(got.ranked[0].triple(), (Triple{2, 0, 2}));
    EXPECT_TRUE(got.stats.short_result);
    visited.insert({2, 0, 2});
    EXPECT_TRUE(mine(model, visited, nullptr, MiningConfig{5, 4, true, true, false, true}).ranked.empty());
}

TEST(Mine, NeverProposesVisitedFacts) {
    const auto fx = make_fixture(2);
    const auto model = oracle::random_model<float>(ModelFamily::QuatE, 2, 50, 4, 2, 1.0);
    const auto got = mine(model, fx.part.known, &fx.svf, MiningConfig{300, 50, true, true, true, true});
    for (const auto& c : got.ranked) EXPECT_FALSE(fx.part.known.contains_packed(c.key));
}

TEST(MineNaive, GuardRefusesLargeSpaces) {
    const auto model = oracle::random_model<float>(ModelFamily::CP, 2, 100, 2, 1);
    EXPECT_THROW(mine_naive(model, FactSet{}, 10, nullptr, true, 1000), ConfigError);
}

TEST(MineRandom, UnvisitedAndSeeded) {
    const auto fx = make_fixture(5);
    const auto a = mine_random(fx.part.known, 40, 50, 4, 7);
    const auto b = mine_random(fx.part.known, 40, 50, 4, 7);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 40u);
    EXPECT_TRUE(set_intersection(a, fx.part.known).empty());
}

TEST(MiningStats, CsvRows) {
    const auto fx = make_fixture(1, 12, 1);
    const auto model = oracle::random_model<float>(ModelFamily::CP, 2, 12, 1, 1);
    const auto got = mine(model, fx.part.known, nullptr, MiningConfig{5, 8, true, true, false, true});
    std::ostringstream out;
    write_mining_stats_header(out);
    write_mining_stats(out, 3, got.stats);
    const std::string text = out.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), got.stats.batches.size() + 1);
    EXPECT_EQ(text.rfind("step,batch_index,batch_size,pass_rate,heap_replacements,wall_ms\n", 0), 0u);
}
