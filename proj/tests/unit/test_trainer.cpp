#include <gtest/gtest.h>

#include <sstream>

#include "pkgc/kg_store.hpp"
#include "pkgc/synthetic.hpp"
#include "pkgc/trainer.hpp"
#include "support/oracles.hpp"

using namespace pkgc;

namespace {

struct GradCase {
    ModelFamily family;
    RegKind kind;
    bool drift;
};

std::vector<GradCase> grad_cases() {
    std::vector<GradCase> out;
    for (auto f : kAllFamilies)
        for (auto k : {RegKind::F2, RegKind::DURA})
            for (bool d : {false, true}) out.push_back({f, k, d});
    return out;
}

class GradientTest : public testing::TestWithParam<GradCase> {};

SyntheticKG small_kg(std::uint64_t seed = 0) {
    SyntheticSpec spec;
    spec.n_entities = 40;
    spec.n_relations = 3;
    spec.n_classes = 3;
    spec.facts_per_relation = 40;
    spec.seed = seed;
    return make_synthetic_kg(spec);
}

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.learning_rate = 0.1;
    cfg.incremental_learning_rate = 0.1;
    cfg.batch_size = 64;
    cfg.max_epochs = 15;
    cfg.incremental_epochs = 5;
    return cfg;
}

}  // namespace

TEST_P(GradientTest, MatchesCentralDifferences) {
    const auto c = GetParam();
    for (std::uint64_t seed : {1u, 2u}) {
        const auto r = oracle::gradient_check(c.family, c.kind, seed, c.drift);
        EXPECT_NEAR(r.loss_library, r.loss_oracle, 1e-10 * std::max(1.0, std::abs(r.loss_oracle)));
        EXPECT_LE(r.max_rel_error, 1e-4) << family_name(c.family) << " " << reg_name(c.kind);
    }
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, GradientTest, testing::ValuesIn(grad_cases()),
                         [](const testing::TestParamInfo<GradCase>& info) {
                             std::string s(family_name(info.param.family));
                             std::replace(s.begin(), s.end(), '-', '_');
                             return s + "_" + std::string(reg_name(info.param.kind)) +
                                    (info.param.drift ? "_drift" : "");
                         });

// Hand-computed DURA for ComplEx with d = 1: h = 1+2i, r = i, t = 3-i.
// q(h, r) = -2+i (|q|^2 = 5), |t|^2 = 10. The reciprocal row is 2+0i:
// q(t, r') = 6-2i (|q|^2 = 40), |h|^2 = 5. Total 60.
TEST(Regularizer, DuraHandComputed) {
    EmbeddingModel<double> m(ModelFamily::ComplEx, 1, 2, 1);
    m.entities() << 1, 2, 3, -1;
    m.relations() << 0, 1, 2, 0;
    EXPECT_DOUBLE_EQ(regularizer(m, AugmentedFact{0, 0, 1}, RegKind::DURA), 60.0);
    // F2 over full rows: 5 + 1 + 10.
    EXPECT_DOUBLE_EQ(regularizer(m, AugmentedFact{0, 0, 1}, RegKind::F2), 16.0);
}

TEST(Regularizer, DriftIsZeroAtSnapshot) {
    auto m = oracle::random_model<double>(ModelFamily::CP, 4, 5, 2, 3);
    const RowMatrix<double> snap = m.entities();
    EXPECT_EQ(drift_penalty(m, snap, AugmentedFact{0, 1, 2}), 0.0);
}

TEST(ReciprocalView, AddsInverseFacts) {
    FactSet f;
    f.insert({0, 1, 2});
    const auto v = reciprocal_view(f, 3);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[1].head, 2u);
    EXPECT_EQ(v[1].relation, 4u);
    EXPECT_EQ(v[1].tail, 0u);
}

TEST(Training, LossDecreases) {
    const auto kg = small_kg();
    auto cfg = quick_config();
    EmbeddingModel<float> m(ModelFamily::ComplEx, cfg.dim, 40, 3);
    m.initialize(cfg.seed);
    const auto view = reciprocal_view(kg.facts, 3);
    const double before = evaluate_loss(m, std::span<const AugmentedFact>(view), LossOptions{});
    const auto report = pretrain(m, kg.facts, cfg);
    const double after = evaluate_loss(m, std::span<const AugmentedFact>(view), LossOptions{});
    EXPECT_EQ(report.epochs.size(), cfg.max_epochs);
    EXPECT_LT(after, before);
}

TEST(Training, EveryFamilyTrainsWithoutDiverging) {
    const auto kg = small_kg(2);
    for (auto f : kAllFamilies) {
        auto cfg = quick_config();
        cfg.dim = f == ModelFamily::UniBiO3 ? 6 : 4;
        cfg.max_epochs = 5;
        cfg.lambda = 0.01;
        EmbeddingModel<float> m(f, cfg.dim, 40, 3);
        m.initialize(1);
        const auto report = pretrain(m, kg.facts, cfg);
        EXPECT_LT(report.epochs.back().mean_loss, report.epochs.front().mean_loss) << family_name(f);
    }
}

TEST(Training, ZeroEpochsLeavesInitialization) {
    const auto kg = small_kg();
    auto cfg = quick_config();
    cfg.max_epochs = 0;
    EmbeddingModel<float> m(ModelFamily::CP, cfg.dim, 40, 3);
    m.initialize(4);
    const auto init = m;
    pretrain(m, kg.facts, cfg);
    EXPECT_TRUE(m == init);
}

TEST(Training, DeterministicForSeed) {
    const auto kg = small_kg();
    auto cfg = quick_config();
    cfg.max_epochs = 3;
    EmbeddingModel<float> a(ModelFamily::RotatE, cfg.dim, 40, 3), b(ModelFamily::RotatE, cfg.dim, 40, 3);
    a.initialize(5);
    b.initialize(5);
    pretrain(a, kg.facts, cfg);
    pretrain(b, kg.facts, cfg);
    EXPECT_TRUE(a == b);
}

TEST(Training, DivergenceRestoresEpochStart) {
    const auto kg = small_kg();
    auto cfg = quick_config();
    cfg.max_epochs = 1;
    EmbeddingModel<float> m(ModelFamily::CP, cfg.dim, 40, 3);
    m.initialize(1);
    m.entities()(0, 0) = std::numeric_limits<float>::quiet_NaN();
    const auto before = m;
    EXPECT_THROW(pretrain(m, kg.facts, cfg), DivergenceError);
    // Restored bit for bit, NaN included.
    EXPECT_EQ(std::memcmp(m.entities().data(), before.entities().data(), sizeof(float) * m.entities().size()), 0);
}

TEST(Training, EpochLogFormat) {
    std::ostringstream out;
    write_train_log_header(out);
    write_train_log_row(out, EpochRecord{1, 2.5, 0.25, 3.0});
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, 32), "epoch,mean_loss,reg_loss,wall_ms");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Incremental, FinetuneWithNothingNewIsSkipped) {
    const auto kg = small_kg();
    auto cfg = quick_config();
    EmbeddingModel<float> m(ModelFamily::CP, cfg.dim, 40, 3);
    m.initialize(1);
    const auto before = m;
    const auto r = incremental_update(m, kg.facts, FactSet{}, UpdateMode::Finetune, cfg);
    EXPECT_TRUE(r.skipped);
    EXPECT_TRUE(m == before);
}

TEST(Incremental, DriftShrinksAsMuGrows) {
    const auto kg = small_kg(3);
    const auto part = partition(kg.facts, {0.7, 1});
    auto cfg = quick_config();
    EmbeddingModel<double> base(ModelFamily::CP, cfg.dim, 40, 3);
    base.initialize(2);
    pretrain(base, part.known, cfg);
    std::vector<double> drift;
    for (double mu : {0.0, 0.1, 10.0}) {
        auto m = base;
        cfg.mu = mu;
        incremental_update(m, set_union(part.known, part.unexplored), part.unexplored, UpdateMode::Retrain, cfg);
        drift.push_back(mean_entity_drift(m, base.entities()));
    }
    EXPECT_GT(drift[0], drift[1]);
    EXPECT_GT(drift[1], drift[2]);
}

TEST(TunedDefaults, TableValues) {
    EXPECT_EQ(tuned_regularization(ModelFamily::ComplEx, false).kind, RegKind::DURA);
    EXPECT_DOUBLE_EQ(tuned_regularization(ModelFamily::ComplEx, false).lambda, 0.001);
    EXPECT_DOUBLE_EQ(tuned_regularization(ModelFamily::CP, true).lambda, 0.0);
    EXPECT_DOUBLE_EQ(tuned_regularization(ModelFamily::RotatE, true).lambda, 0.01);
    const TrainConfig d;
    EXPECT_DOUBLE_EQ(d.learning_rate, 0.001);
    EXPECT_DOUBLE_EQ(d.incremental_learning_rate, 0.001);
    EXPECT_EQ(d.batch_size, 1000u);
    EXPECT_EQ(d.max_epochs, 100u);
    EXPECT_EQ(d.incremental_epochs, 20u);
    EXPECT_EQ(d.dim, 500u);
}

TEST(RegSearch, PicksAGridPoint) {
    const auto kg = small_kg();
    const auto [train_facts, valid_facts] = split_train_valid(kg.facts, 0.05, 0);
    auto cfg = quick_config();
    cfg.max_epochs = 2;
    const double lambdas[] = {0.0, 0.01};
    const auto best = search_regularization<float>(ModelFamily::CP, 40, 3, train_facts, valid_facts, cfg, lambdas);
    EXPECT_TRUE(best.lambda == 0.0 || best.lambda == 0.01);
    EXPECT_TRUE(std::isfinite(best.valid_loss));
}
