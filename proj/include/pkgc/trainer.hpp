#pragma once
// Training: full-softmax cross-entropy over all tails on the reciprocal view,
// F2 / DURA regularization, entity drift anchoring for incremental updates,
// and mini-batch Adagrad.

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "pkgc/errors.hpp"
#include "pkgc/kge/model.hpp"
#include "pkgc/triple.hpp"

namespace pkgc {

enum class RegKind { F2, DURA };

inline std::string_view reg_name(RegKind k) { return k == RegKind::F2 ? "f2" : "dura"; }

inline std::optional<RegKind> parse_reg(std::string_view s) {
    if (s == "f2") return RegKind::F2;
    if (s == "dura") return RegKind::DURA;
    return std::nullopt;
}

enum class UpdateMode { None, Retrain, Finetune };

inline std::string_view update_mode_name(UpdateMode m) {
    switch (m) {
        case UpdateMode::None: return "none";
        case UpdateMode::Retrain: return "retrain";
        case UpdateMode::Finetune: return "finetune";
    }
    return "?";
}

inline std::optional<UpdateMode> parse_update_mode(std::string_view s) {
    if (s == "none") return UpdateMode::None;
    if (s == "retrain") return UpdateMode::Retrain;
    if (s == "finetune") return UpdateMode::Finetune;
    return std::nullopt;
}

struct TrainConfig {
    double learning_rate = 0.001;
    double incremental_learning_rate = 0.001;
    std::size_t batch_size = 1000;
    std::size_t max_epochs = 100;
    std::size_t incremental_epochs = 20;
    RegKind reg_kind = RegKind::F2;
    double lambda = 0.0;
    double mu = 0.001;
    std::size_t dim = 500;
    std::uint64_t seed = 0;
    double adagrad_eps = 1e-10;
};

// Regularizer choice and weight after the grid search, per family; the
// first pair is for WN18-like graphs, the second for FB15k.
struct RegDefault {
    RegKind kind;
    double lambda;
};

inline RegDefault tuned_regularization(ModelFamily f, bool fb15k_like) {
    switch (f) {
        case ModelFamily::TransE: return {RegKind::F2, 0.003};
        case ModelFamily::CP: return {RegKind::F2, fb15k_like ? 0.0 : 0.001};
        case ModelFamily::RotatE: return {RegKind::F2, fb15k_like ? 0.01 : 0.005};
        case ModelFamily::RotE: return {RegKind::F2, 0.01};
        case ModelFamily::ComplEx: return {RegKind::DURA, 0.001};
        case ModelFamily::QuatE: return {RegKind::F2, fb15k_like ? 0.001 : 0.003};
        case ModelFamily::RESCAL: return {RegKind::F2, fb15k_like ? 0.003 : 0.001};
        case ModelFamily::UniBiO2:
        case ModelFamily::UniBiO3: return {RegKind::DURA, 0.01};
    }
    return {RegKind::F2, 0.0};
}

// A fact of the augmented training view; `relation` may be a reciprocal id.
struct AugmentedFact {
    EntityId head;
    RelationId relation;
    EntityId tail;
};

// {(h, r, t), (t, r + |R|, h)} for every fact, in ascending packed order.
inline std::vector<AugmentedFact> reciprocal_view(const FactSet& facts, std::size_t n_relations) {
    std::vector<AugmentedFact> out;
    out.reserve(2 * facts.size());
    for (const auto& f : facts.sorted()) {
        out.push_back({f.head, f.relation, f.tail});
        out.push_back({f.tail, static_cast<RelationId>(f.relation + n_relations), f.head});
    }
    return out;
}

template <typename Real>
struct Gradients {
    RowMatrix<Real> entities;
    RowMatrix<Real> relations;
    Real gamma = 0;

    explicit Gradients(const EmbeddingModel<Real>& m)
        : entities(RowMatrix<Real>::Zero(m.entities().rows(), m.entities().cols())),
          relations(RowMatrix<Real>::Zero(m.relations().rows(), m.relations().cols())) {}

    void zero() {
        entities.setZero();
        relations.setZero();
        gamma = 0;
    }
};

// Reg(h, r, t) for one augmented fact.
//   F2:   |h|^2 + |r|^2 + |t|^2 over the full parameter rows
//   DURA: |q(h, r)|^2 + |t_c|^2 + |q(t, r')|^2 + |h_c|^2
// where q is the family's composition and x_c the compared slice of x.
// When `grad` is set, scale * dReg is accumulated into it.
template <typename Real>
Real regularizer(const EmbeddingModel<Real>& model, const AugmentedFact& f, RegKind kind,
                 Gradients<Real>* grad = nullptr, Real scale = Real(1)) {
    const auto& ent = model.entities();
    const auto& rel = model.relations();
    if (kind == RegKind::F2) {
        const Real value = ent.row(f.head).squaredNorm() + rel.row(f.relation).squaredNorm() + ent.row(f.tail).squaredNorm();
        if (grad) {
            grad->entities.row(f.head) += 2 * scale * ent.row(f.head);
            grad->entities.row(f.tail) += 2 * scale * ent.row(f.tail);
            grad->relations.row(f.relation) += 2 * scale * rel.row(f.relation);
        }
        return value;
    }

    const auto& lay = model.layout();
    const auto off = static_cast<Eigen::Index>(lay.tail_offset);
    const auto width = static_cast<Eigen::Index>(lay.query_width);
    const RelationId inverse = model.reciprocal(f.relation);
    Real value = 0;
    // Two directions: (head, relation) -> tail and (tail, inverse) -> head.
    const std::pair<EntityId, RelationId> sides[2] = {{f.head, f.relation}, {f.tail, inverse}};
    const EntityId compared[2] = {f.tail, f.head};
    Vec<Real> q(width);
    for (int s = 0; s < 2; ++s) {
        const auto [e, r] = sides[s];
        model.query(e, r, q.data());
        value += q.squaredNorm();
        const auto slice = ent.row(compared[s]).segment(off, width);
        value += slice.squaredNorm();
        if (grad) {
            Vec<Real> dq = 2 * scale * q;
            kernels::compose_backward(model.family(), model.dim(), ent.row(e).data(), rel.row(r).data(), dq.data(),
                                      grad->entities.row(e).data(), grad->relations.row(r).data());
            grad->entities.row(compared[s]).segment(off, width) += 2 * scale * slice;
        }
    }
    return value;
}

// Reg_c: |h - h_old| + |t - t_old| against a snapshot of the entity table.
template <typename Real>
Real drift_penalty(const EmbeddingModel<Real>& model, const RowMatrix<Real>& snapshot, const AugmentedFact& f,
                   Gradients<Real>* grad = nullptr, Real scale = Real(1)) {
    Real value = 0;
    for (EntityId e : {f.head, f.tail}) {
        const Vec<Real> diff = (model.entities().row(e) - snapshot.row(e)).transpose();
        const Real n = diff.norm();
        value += n;
        if (grad && n > Real(0)) grad->entities.row(e) += (scale / n) * diff.transpose();
    }
    return value;
}

struct LossOptions {
    RegKind reg_kind = RegKind::F2;
    double lambda = 0.0;
    double mu = 0.0;
};

template <typename Real>
struct LossTerms {
    Real total = 0;
    Real data = 0;   // mean cross-entropy
    Real reg = 0;    // lambda * mean Reg
    Real drift = 0;  // mu * mean Reg_c
};

// Mean over the batch of -log softmax(score(h, r, .))[t] + lambda * Reg
// (+ mu * Reg_c when a snapshot is given). Gradients w.r.t. every parameter,
// including gamma, are accumulated into `grad` when set.
template <typename Real>
LossTerms<Real> loss(const EmbeddingModel<Real>& model, std::span<const AugmentedFact> batch, const LossOptions& opt,
                     Gradients<Real>* grad = nullptr, const RowMatrix<Real>* snapshot = nullptr) {
    LossTerms<Real> out;
    if (batch.empty()) return out;
    const auto& lay = model.layout();
    const auto n_entities = static_cast<Eigen::Index>(model.num_entities());
    const auto width = static_cast<Eigen::Index>(lay.query_width);
    const auto off = static_cast<Eigen::Index>(lay.tail_offset);
    const Real inv_b = Real(1) / static_cast<Real>(batch.size());
    const Real gamma = model.gamma();
    const auto tails = model.tail_slice();

    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < batch.size(); start += kChunk) {
        const std::size_t stop = std::min(batch.size(), start + kChunk);
        const auto rows = static_cast<Eigen::Index>(stop - start);
        RowMatrix<Real> q(rows, width);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto& f = batch[start + static_cast<std::size_t>(i)];
            model.query(f.head, f.relation, q.row(i).data());
        }

        RowMatrix<Real> raw(rows, n_entities);
        RowMatrix<Real> dist;
        if (lay.distance) {
            dist.resize(rows, n_entities);
            for (Eigen::Index i = 0; i < rows; ++i)
                dist.row(i) = (tails.rowwise() - q.row(i)).rowwise().norm().transpose();
            raw = -dist;
        } else {
            raw.noalias() = q * tails.transpose();
        }

        // Row-wise log-softmax of gamma * raw.
        RowMatrix<Real> prob(rows, n_entities);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto& f = batch[start + static_cast<std::size_t>(i)];
            const auto s = (gamma * raw.row(i)).eval();
            const Real m = s.maxCoeff();
            const Real lse = m + std::log((s.array() - m).exp().sum());
            out.data += (lse - s(f.tail)) * inv_b;
            if (grad) prob.row(i) = (s.array() - lse).exp().matrix();
        }
        if (!grad) continue;

        // dL/dscore = (softmax - onehot) / B
        for (Eigen::Index i = 0; i < rows; ++i) prob(i, batch[start + static_cast<std::size_t>(i)].tail) -= Real(1);
        prob *= inv_b;
        grad->gamma += (prob.array() * raw.array()).sum();
        const RowMatrix<Real> draw = gamma * prob;

        RowMatrix<Real> dq(rows, width);
        auto dtails = grad->entities.middleCols(off, width);
        if (lay.distance) {
            // raw = -|q - t|:  d/dq = -(q - t)/|q - t|,  d/dt = (q - t)/|q - t|
            RowMatrix<Real> w = RowMatrix<Real>::Zero(rows, n_entities);
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < n_entities; ++j)
                    if (dist(i, j) > Real(0)) w(i, j) = draw(i, j) / dist(i, j);
            const Vec<Real> row_sum = w.rowwise().sum();
            const Vec<Real> col_sum = w.colwise().sum().transpose();
            dq.noalias() = w * tails;
            dq -= row_sum.asDiagonal() * q;
            dtails.noalias() += w.transpose() * q;
            dtails -= col_sum.asDiagonal() * tails;
        } else {
            dq.noalias() = draw * tails;
            dtails.noalias() += draw.transpose() * q;
        }
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto& f = batch[start + static_cast<std::size_t>(i)];
            kernels::compose_backward(model.family(), model.dim(), model.entities().row(f.head).data(),
                                      model.relations().row(f.relation).data(), dq.row(i).data(),
                                      grad->entities.row(f.head).data(), grad->relations.row(f.relation).data());
        }
    }

    if (opt.lambda != 0.0) {
        const Real scale = static_cast<Real>(opt.lambda) * inv_b;
        Real sum = 0;
        for (const auto& f : batch) sum += regularizer(model, f, opt.reg_kind, grad, scale);
        out.reg = scale * sum;
    }
    if (snapshot && opt.mu != 0.0) {
        const Real scale = static_cast<Real>(opt.mu) * inv_b;
        Real sum = 0;
        for (const auto& f : batch) sum += drift_penalty(model, *snapshot, f, grad, scale);
        out.drift = scale * sum;
    }
    out.total = out.data + out.reg + out.drift;
    return out;
}

// Per-parameter Adagrad accumulators.
template <typename Real>
class Adagrad {
public:
    explicit Adagrad(const EmbeddingModel<Real>& m, double lr, double eps = 1e-10)
        : lr_(static_cast<Real>(lr)),
          eps_(static_cast<Real>(eps)),
          acc_entities_(RowMatrix<Real>::Zero(m.entities().rows(), m.entities().cols())),
          acc_relations_(RowMatrix<Real>::Zero(m.relations().rows(), m.relations().cols())) {}

    void step(EmbeddingModel<Real>& model, const Gradients<Real>& g) {
        apply(model.entities(), acc_entities_, g.entities);
        apply(model.relations(), acc_relations_, g.relations);
        if (model.layout().trainable_gamma) {
            acc_gamma_ += g.gamma * g.gamma;
            Real next = model.gamma() - lr_ * g.gamma / (std::sqrt(acc_gamma_) + eps_);
            model.set_gamma(std::max(next, Real(1e-6)));
        }
    }

private:
    void apply(RowMatrix<Real>& param, RowMatrix<Real>& acc, const RowMatrix<Real>& g) const {
        acc.array() += g.array().square();
        param.array() -= lr_ * g.array() / (acc.array().sqrt() + eps_);
    }

    Real lr_;
    Real eps_;
    Real acc_gamma_ = 0;
    RowMatrix<Real> acc_entities_;
    RowMatrix<Real> acc_relations_;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_loss = 0;  // mean total loss over the epoch's batches
    double reg_loss = 0;   // mean regularization part (lambda * Reg + mu * Reg_c)
    double wall_ms = 0;
};

inline void write_train_log_header(std::ostream& out) { out << "epoch,mean_loss,reg_loss,wall_ms\n"; }

inline void write_train_log_row(std::ostream& out, const EpochRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.3f\n", r.epoch, r.mean_loss, r.reg_loss, r.wall_ms);
    out << buf;
}

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t steps = 0;
    bool skipped = false;  // finetune with nothing new
};

// Mean loss over the whole view, no parameter change.
template <typename Real>
double evaluate_loss(const EmbeddingModel<Real>& model, std::span<const AugmentedFact> view, const LossOptions& opt,
                     std::size_t batch_size = 1000, const RowMatrix<Real>* snapshot = nullptr) {
    if (view.empty()) return 0.0;
    double sum = 0;
    for (std::size_t start = 0; start < view.size(); start += batch_size) {
        const auto n = std::min(batch_size, view.size() - start);
        sum += static_cast<double>(loss<Real>(model, view.subspan(start, n), opt, nullptr, snapshot).total) *
               static_cast<double>(n);
    }
    return sum / static_cast<double>(view.size());
}

// Mini-batch Adagrad over `view` for `epochs` epochs, projecting constraints
// after every step. Each epoch shuffles with a generator seeded from
// (cfg.seed, epoch). On a non-finite loss the model is restored to its state
// at the start of the failing epoch and DivergenceError is thrown.
template <typename Real>
TrainReport train(EmbeddingModel<Real>& model, std::vector<AugmentedFact> view, const TrainConfig& cfg,
                  std::size_t epochs, const RowMatrix<Real>* snapshot = nullptr,
                  const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    TrainReport report;
    if (epochs == 0 || view.empty()) return report;
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
    const LossOptions opt{cfg.reg_kind, cfg.lambda, snapshot ? cfg.mu : 0.0};
    Adagrad<Real> optimizer(model, cfg.learning_rate, cfg.adagrad_eps);
    Gradients<Real> grad(model);

    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const EmbeddingModel<Real> last_good = model;
        std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + epoch);
        std::shuffle(view.begin(), view.end(), rng);
        double total = 0, reg = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < view.size(); start += cfg.batch_size) {
            const auto n = std::min(cfg.batch_size, view.size() - start);
            grad.zero();
            const auto terms = loss<Real>(model, std::span<const AugmentedFact>(view).subspan(start, n), opt, &grad, snapshot);
            if (!std::isfinite(static_cast<double>(terms.total))) {
                model = last_good;
                throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch) +
                                      "; lower the learning rate or regularization weight");
            }
            optimizer.step(model, grad);
            model.project_constraints();
            total += static_cast<double>(terms.total);
            reg += static_cast<double>(terms.reg + terms.drift);
            ++batches;
            ++report.steps;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_loss = total / static_cast<double>(batches);
        rec.reg_loss = reg / static_cast<double>(batches);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return report;
}

template <typename Real>
TrainReport pretrain(EmbeddingModel<Real>& model, const FactSet& known, const TrainConfig& cfg,
                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    return train<Real>(model, reciprocal_view(known, model.num_relations()), cfg, cfg.max_epochs, nullptr, on_epoch);
}

// Incremental update after new facts were merged into `known`. Retrain fits
// all of `known`, finetune only `fresh`; both anchor entity rows to their
// values before the update with weight cfg.mu. Relations are not anchored.
template <typename Real>
TrainReport incremental_update(EmbeddingModel<Real>& model, const FactSet& known, const FactSet& fresh,
                               UpdateMode mode, const TrainConfig& cfg,
                               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    if (mode == UpdateMode::None) return {};
    if (mode == UpdateMode::Finetune && fresh.empty()) {
        TrainReport r;
        r.skipped = true;
        return r;
    }
    const RowMatrix<Real> snapshot = model.entities();
    const FactSet& data = mode == UpdateMode::Retrain ? known : fresh;
    TrainConfig step_cfg = cfg;
    step_cfg.learning_rate = cfg.incremental_learning_rate;
    return train<Real>(model, reciprocal_view(data, model.num_relations()), step_cfg, cfg.incremental_epochs, &snapshot,
                       on_epoch);
}

// Mean Euclidean distance between current entity rows and a snapshot.
template <typename Real>
double mean_entity_drift(const EmbeddingModel<Real>& model, const RowMatrix<Real>& snapshot) {
    double sum = 0;
    for (Eigen::Index i = 0; i < snapshot.rows(); ++i)
        sum += static_cast<double>((model.entities().row(i) - snapshot.row(i)).norm());
    return snapshot.rows() ? sum / static_cast<double>(snapshot.rows()) : 0.0;
}

struct RegSearchResult {
    RegKind kind = RegKind::F2;
    double lambda = 0.0;
    double valid_loss = 0.0;
};

// Grid search over regularizer kind and weight on a held-out split; each
// candidate trains a fresh model from the same initialization seed.
template <typename Real>
RegSearchResult search_regularization(ModelFamily family, std::size_t n_entities, std::size_t n_relations,
                                      const FactSet& train_facts, const FactSet& valid_facts, TrainConfig cfg,
                                      std::span<const double> lambdas = std::span<const double>(),
                                      std::span<const RegKind> kinds = std::span<const RegKind>()) {
    static constexpr double kDefaultGrid[] = {0.0, 0.001, 0.003, 0.005, 0.01};
    static constexpr RegKind kDefaultKinds[] = {RegKind::F2, RegKind::DURA};
    if (lambdas.empty()) lambdas = kDefaultGrid;
    if (kinds.empty()) kinds = kDefaultKinds;
    RegSearchResult best;
    best.valid_loss = std::numeric_limits<double>::infinity();
    const auto valid_view = reciprocal_view(valid_facts, n_relations);
    for (auto kind : kinds) {
        for (double lambda : lambdas) {
            EmbeddingModel<Real> model(family, cfg.dim, n_entities, n_relations);
            model.initialize(cfg.seed);
            cfg.reg_kind = kind;
            cfg.lambda = lambda;
            pretrain(model, train_facts, cfg);
            const double v = evaluate_loss(model, std::span<const AugmentedFact>(valid_view), LossOptions{});
            if (v < best.valid_loss) best = {kind, lambda, v};
        }
    }
    return best;
}

}  // namespace pkgc
