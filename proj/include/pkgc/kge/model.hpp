#pragma once
// Embedding parameter tables and scoring.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "pkgc/kge/family.hpp"
#include "pkgc/triple.hpp"

namespace pkgc {

template <typename Real>
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Scores of every candidate tail for one query (h, r).
template <typename Real>
struct ScoreBatch {
    EntityId head = 0;
    RelationId relation = 0;
    Vec<Real> scores;
};

template <typename Real = float>
class EmbeddingModel {
public:
    using Scalar = Real;
    using Matrix = RowMatrix<Real>;
    using Vector = Vec<Real>;

    EmbeddingModel() = default;

    // Relation table holds 2 * n_relations rows: forward ids then reciprocal
    // ids r + n_relations.
    EmbeddingModel(ModelFamily family, std::size_t dim, std::size_t n_entities, std::size_t n_relations)
        : family_(family),
          dim_(dim),
          n_entities_(n_entities),
          n_relations_(n_relations),
          layout_(family_layout(family, dim)),
          entities_(Matrix::Zero(static_cast<Eigen::Index>(n_entities), static_cast<Eigen::Index>(layout_.entity_width))),
          relations_(Matrix::Zero(static_cast<Eigen::Index>(2 * n_relations),
                                  static_cast<Eigen::Index>(layout_.relation_width))) {}

    // i.i.d. uniform in [-scale, scale], then constraint projection.
    void initialize(std::uint64_t seed, Real scale = Real(0.001)) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(-static_cast<double>(scale), static_cast<double>(scale));
        for (Eigen::Index i = 0; i < entities_.size(); ++i) entities_.data()[i] = static_cast<Real>(unit(rng));
        for (Eigen::Index i = 0; i < relations_.size(); ++i) relations_.data()[i] = static_cast<Real>(unit(rng));
        gamma_ = Real(1);
        project_constraints();
    }

    [[nodiscard]] ModelFamily family() const noexcept { return family_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t num_entities() const noexcept { return n_entities_; }
    [[nodiscard]] std::size_t num_relations() const noexcept { return n_relations_; }
    [[nodiscard]] const FamilyLayout& layout() const noexcept { return layout_; }

    [[nodiscard]] Real gamma() const noexcept { return gamma_; }
    void set_gamma(Real g) noexcept { gamma_ = g; }

    [[nodiscard]] Matrix& entities() noexcept { return entities_; }
    [[nodiscard]] const Matrix& entities() const noexcept { return entities_; }
    [[nodiscard]] Matrix& relations() noexcept { return relations_; }
    [[nodiscard]] const Matrix& relations() const noexcept { return relations_; }

    [[nodiscard]] RelationId reciprocal(RelationId r) const noexcept {
        return r < n_relations_ ? static_cast<RelationId>(r + n_relations_) : static_cast<RelationId>(r - n_relations_);
    }

    // Query vector q = compose(h, r); r may be a reciprocal id.
    void query(EntityId h, RelationId r, Real* out) const {
        check_ids(h, r);
        kernels::compose(family_, dim_, entities_.row(h).data(), relations_.row(r).data(), out);
    }

    [[nodiscard]] Vector query(EntityId h, RelationId r) const {
        Vector q(static_cast<Eigen::Index>(layout_.query_width));
        query(h, r, q.data());
        return q;
    }

    // Pre-gamma score of a (possibly reciprocal) fact.
    [[nodiscard]] Real raw_score(EntityId h, RelationId r, EntityId t) const {
        check_ids(h, r);
        check_entity(t);
        const Vector q = query(h, r);
        const auto tail = tail_slice().row(t);
        if (layout_.distance) return -(tail.transpose() - q).norm();
        return tail.dot(q.transpose());
    }

    [[nodiscard]] Real score(EntityId h, RelationId r, EntityId t) const { return gamma_ * raw_score(h, r, t); }

    // out[t] = score(h, r, t) for every entity t.
    void score_tails(EntityId h, RelationId r, std::span<Real> out) const {
        if (out.size() != n_entities_) throw std::invalid_argument("score_tails: output size mismatch");
        const Vector q = query(h, r);
        Eigen::Map<Vector> dst(out.data(), static_cast<Eigen::Index>(out.size()));
        if (layout_.distance)
            dst.noalias() = -gamma_ * (tail_slice().rowwise() - q.transpose()).rowwise().norm();
        else
            dst.noalias() = gamma_ * (tail_slice() * q);
    }

    [[nodiscard]] ScoreBatch<Real> score_tails(EntityId h, RelationId r) const {
        ScoreBatch<Real> batch{h, r, Vector(static_cast<Eigen::Index>(n_entities_))};
        score_tails(h, r, std::span<Real>(batch.scores.data(), n_entities_));
        return batch;
    }

    // Compared slice of the entity table (|E| x query_width).
    [[nodiscard]] auto tail_slice() const {
        return entities_.middleCols(static_cast<Eigen::Index>(layout_.tail_offset),
                                    static_cast<Eigen::Index>(layout_.query_width));
    }

    // Restores the family's invariants: unit entity rows and clamped block
    // scales for UniBi, unit-modulus coordinates for RotatE, unit quaternions
    // for QuatE and the UniBi-O(3) rotations.
    void project_constraints() {
        switch (family_) {
            case ModelFamily::UniBiO2:
            case ModelFamily::UniBiO3: {
                for (Eigen::Index i = 0; i < entities_.rows(); ++i) {
                    auto row = entities_.row(i);
                    const Real n = row.norm();
                    if (n > Real(0)) {
                        row /= n;
                    } else {
                        row.setZero();
                        row(0) = Real(1);
                    }
                }
                const std::size_t stride = family_ == ModelFamily::UniBiO2 ? 2 : 5;
                const std::size_t blocks = family_ == ModelFamily::UniBiO2 ? dim_ / 2 : dim_ / 3;
                for (Eigen::Index i = 0; i < relations_.rows(); ++i) {
                    Real* r = relations_.row(i).data();
                    for (std::size_t k = 0; k < blocks; ++k) {
                        Real* block = r + k * stride;
                        if (family_ == ModelFamily::UniBiO3) normalize_span(block, 4, true);
                        Real& sigma = block[stride - 1];
                        sigma = std::clamp(sigma, Real(-1), Real(1));
                    }
                }
                return;
            }
            case ModelFamily::RotatE:
                for (Eigen::Index i = 0; i < relations_.rows(); ++i) {
                    Real* r = relations_.row(i).data();
                    for (std::size_t k = 0; k < dim_; ++k) normalize_span(r + 2 * k, 2, true);
                }
                return;
            case ModelFamily::QuatE:
                for (Eigen::Index i = 0; i < relations_.rows(); ++i) {
                    Real* r = relations_.row(i).data();
                    for (std::size_t k = 0; k < dim_; ++k) normalize_span(r + 4 * k, 4, true);
                }
                return;
            default:
                return;
        }
    }

    [[nodiscard]] bool has_constraints() const noexcept {
        switch (family_) {
            case ModelFamily::UniBiO2:
            case ModelFamily::UniBiO3:
            case ModelFamily::RotatE:
            case ModelFamily::QuatE: return true;
            default: return false;
        }
    }

    [[nodiscard]] std::size_t parameter_count() const noexcept {
        return static_cast<std::size_t>(entities_.size() + relations_.size()) + 1;
    }

    friend bool operator==(const EmbeddingModel& a, const EmbeddingModel& b) {
        return a.family_ == b.family_ && a.dim_ == b.dim_ && a.n_entities_ == b.n_entities_ &&
               a.n_relations_ == b.n_relations_ && a.gamma_ == b.gamma_ && a.entities_ == b.entities_ &&
               a.relations_ == b.relations_;
    }

    template <typename Other>
    [[nodiscard]] EmbeddingModel<Other> cast() const {
        EmbeddingModel<Other> out(family_, dim_, n_entities_, n_relations_);
        out.entities() = entities_.template cast<Other>();
        out.relations() = relations_.template cast<Other>();
        out.set_gamma(static_cast<Other>(gamma_));
        return out;
    }

private:
    // Scales v to unit norm; a zero vector becomes the first basis vector.
    static void normalize_span(Real* v, std::size_t n, bool reset_zero) {
        Real sq = 0;
        for (std::size_t i = 0; i < n; ++i) sq += v[i] * v[i];
        if (sq > Real(0)) {
            const Real inv = Real(1) / std::sqrt(sq);
            for (std::size_t i = 0; i < n; ++i) v[i] *= inv;
        } else if (reset_zero) {
            v[0] = Real(1);
        }
    }

    void check_entity(EntityId e) const {
        if (e >= n_entities_) throw std::out_of_range("entity id " + std::to_string(e) + " out of range");
    }
    void check_ids(EntityId h, RelationId r) const {
        check_entity(h);
        if (r >= 2 * n_relations_) throw std::out_of_range("relation id " + std::to_string(r) + " out of range");
    }

    ModelFamily family_ = ModelFamily::TransE;
    std::size_t dim_ = 0;
    std::size_t n_entities_ = 0;
    std::size_t n_relations_ = 0;
    FamilyLayout layout_{};
    Real gamma_ = Real(1);
    Matrix entities_;
    Matrix relations_;
};

struct RelNormReport {
    std::size_t zero_norm_relations = 0;
};

// Mining-time relation normalization: a copy of the model whose relation
// rows (forward and reciprocal) have unit Euclidean norm. Rows of zero norm
// stay as they are and are counted. Scores for a fixed relation are a
// positive multiple of the original ones, so per-relation rankings do not move.
template <typename Real>
EmbeddingModel<Real> apply_relation_normalization(const EmbeddingModel<Real>& model, RelNormReport* report = nullptr) {
    if (model.family() != ModelFamily::CP && model.family() != ModelFamily::ComplEx)
        throw ConfigError("relation normalization applies to cp and complex only");
    EmbeddingModel<Real> out = model;
    std::size_t zero = 0;
    for (Eigen::Index i = 0; i < out.relations().rows(); ++i) {
        auto row = out.relations().row(i);
        const Real n = row.norm();
        if (n > Real(0))
            row /= n;
        else
            ++zero;
    }
    if (report) report->zero_norm_relations = zero;
    return out;
}

}  // namespace pkgc
