#pragma once
// Model registry: parameter layouts and the entity-relation composition of
// every supported family.
//
// Each family scores a fact through a query vector q = compose(h, r) that is
// compared against a slice of the tail row:
//
//   family      entity row        relation row           compare    raw score
//   ---------   ---------------   --------------------   --------   -------------------------------
//   TransE      d                 d                      distance   -|h + r - t|
//   CP          2d (head|tail)    d                      bilinear   <h_head, r, t_tail>
//   ComplEx     d complex         d complex              bilinear   Re<h, r, conj(t)>
//   RESCAL      d                 d x d (row-major)      bilinear   h^T M t
//   RotatE      d complex         d complex, |r_i| = 1   distance   -|h o r - t|
//   RotE        d (even)          d/2 angles | d shift   distance   -|G(theta) h + b - t|
//   QuatE       d quaternions     d unit quaternions     bilinear   <h (x) r, t>
//   UniBi-O(2)  d (even), |e|=1   d/2 x (angle, sigma)   bilinear   h^T B t,  B_k = sigma_k R(angle_k)
//   UniBi-O(3)  d (d%3==0), |e|=1 d/3 x (quat, sigma)    bilinear   h^T B t,  B_k = sigma_k R(quat_k)
//
// Complex and quaternion coordinates are interleaved reals. Distances are
// Euclidean over all real coordinates. For the bilinear families
// q = B^T h (resp. the family's product) so that raw = <q, t>. The final
// score is gamma * raw; gamma is trainable for UniBi only.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "pkgc/errors.hpp"

namespace pkgc {

enum class ModelFamily : std::uint32_t {
    TransE = 0,
    CP = 1,
    ComplEx = 2,
    RESCAL = 3,
    RotatE = 4,
    RotE = 5,
    QuatE = 6,
    UniBiO2 = 7,
    UniBiO3 = 8,
};

inline constexpr ModelFamily kAllFamilies[] = {
    ModelFamily::TransE, ModelFamily::CP,    ModelFamily::ComplEx, ModelFamily::RESCAL,  ModelFamily::RotatE,
    ModelFamily::RotE,   ModelFamily::QuatE, ModelFamily::UniBiO2, ModelFamily::UniBiO3,
};

inline std::string_view family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::TransE: return "transe";
        case ModelFamily::CP: return "cp";
        case ModelFamily::ComplEx: return "complex";
        case ModelFamily::RESCAL: return "rescal";
        case ModelFamily::RotatE: return "rotate";
        case ModelFamily::RotE: return "rote";
        case ModelFamily::QuatE: return "quate";
        case ModelFamily::UniBiO2: return "unibi-o2";
        case ModelFamily::UniBiO3: return "unibi-o3";
    }
    return "?";
}

// Case-insensitive: "ComplEx" and "complex" both parse.
inline std::optional<ModelFamily> parse_family(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto f : kAllFamilies)
        if (family_name(f) == lower) return f;
    return std::nullopt;
}

struct FamilyLayout {
    std::size_t entity_width = 0;
    std::size_t relation_width = 0;
    std::size_t query_width = 0;
    std::size_t tail_offset = 0;  // start of the compared slice inside an entity row
    bool distance = false;
    bool trainable_gamma = false;
};

inline FamilyLayout family_layout(ModelFamily f, std::size_t d) {
    if (d == 0) throw ConfigError("embedding dimension must be positive");
    switch (f) {
        case ModelFamily::TransE: return {d, d, d, 0, true, false};
        case ModelFamily::CP: return {2 * d, d, d, d, false, false};
        case ModelFamily::ComplEx: return {2 * d, 2 * d, 2 * d, 0, false, false};
        case ModelFamily::RESCAL: return {d, d * d, d, 0, false, false};
        case ModelFamily::RotatE: return {2 * d, 2 * d, 2 * d, 0, true, false};
        case ModelFamily::RotE:
            if (d % 2) throw ConfigError("rote needs an even dimension");
            return {d, d / 2 + d, d, 0, true, false};
        case ModelFamily::QuatE: return {4 * d, 4 * d, 4 * d, 0, false, false};
        case ModelFamily::UniBiO2:
            if (d % 2) throw ConfigError("unibi-o2 needs an even dimension");
            return {d, d, d, 0, false, true};
        case ModelFamily::UniBiO3:
            if (d % 3) throw ConfigError("unibi-o3 needs a dimension divisible by 3");
            return {d, 5 * (d / 3), d, 0, false, true};
    }
    throw ConfigError("unknown model family");
}

namespace kernels {

template <typename Real>
void rotation3(const Real* q, Real (&m)[3][3]);

// q = compose(e, r). `e` is the full entity row, `r` the relation row.
template <typename Real>
void compose(ModelFamily f, std::size_t d, const Real* e, const Real* r, Real* q) {
    switch (f) {
        case ModelFamily::TransE:
            for (std::size_t i = 0; i < d; ++i) q[i] = e[i] + r[i];
            return;
        case ModelFamily::CP:
            for (std::size_t i = 0; i < d; ++i) q[i] = e[i] * r[i];
            return;
        case ModelFamily::ComplEx:
        case ModelFamily::RotatE:
            for (std::size_t k = 0; k < d; ++k) {
                const Real a = e[2 * k], b = e[2 * k + 1], c = r[2 * k], s = r[2 * k + 1];
                q[2 * k] = a * c - b * s;
                q[2 * k + 1] = a * s + b * c;
            }
            return;
        case ModelFamily::RESCAL:
            for (std::size_t j = 0; j < d; ++j) q[j] = Real(0);
            for (std::size_t i = 0; i < d; ++i) {
                const Real hi = e[i];
                const Real* row = r + i * d;
                for (std::size_t j = 0; j < d; ++j) q[j] += hi * row[j];
            }
            return;
        case ModelFamily::RotE: {
            const std::size_t half = d / 2;
            const Real* shift = r + half;
            for (std::size_t k = 0; k < half; ++k) {
                const Real x = e[2 * k], y = e[2 * k + 1];
                const Real c = std::cos(r[k]), s = std::sin(r[k]);
                q[2 * k] = c * x - s * y + shift[2 * k];
                q[2 * k + 1] = s * x + c * y + shift[2 * k + 1];
            }
            return;
        }
        case ModelFamily::QuatE:
            for (std::size_t k = 0; k < d; ++k) {
                const Real a = e[4 * k], b = e[4 * k + 1], c = e[4 * k + 2], dd = e[4 * k + 3];
                const Real p = r[4 * k], u = r[4 * k + 1], v = r[4 * k + 2], w = r[4 * k + 3];
                q[4 * k] = a * p - b * u - c * v - dd * w;
                q[4 * k + 1] = a * u + b * p + c * w - dd * v;
                q[4 * k + 2] = a * v - b * w + c * p + dd * u;
                q[4 * k + 3] = a * w + b * v - c * u + dd * p;
            }
            return;
        case ModelFamily::UniBiO2:
            for (std::size_t k = 0; k < d / 2; ++k) {
                const Real x = e[2 * k], y = e[2 * k + 1];
                const Real c = std::cos(r[2 * k]), s = std::sin(r[2 * k]), sigma = r[2 * k + 1];
                q[2 * k] = sigma * (c * x + s * y);
                q[2 * k + 1] = sigma * (-s * x + c * y);
            }
            return;
        case ModelFamily::UniBiO3:
            for (std::size_t k = 0; k < d / 3; ++k) {
                Real m[3][3];
                rotation3(r + 5 * k, m);
                const Real sigma = r[5 * k + 4];
                const Real* h = e + 3 * k;
                for (std::size_t j = 0; j < 3; ++j)
                    q[3 * k + j] = sigma * (m[0][j] * h[0] + m[1][j] * h[1] + m[2][j] * h[2]);
            }
            return;
    }
}

// Homogeneous rotation matrix of quaternion (w, x, y, z): |q|^2 times a rotation.
template <typename Real>
void rotation3(const Real* q, Real (&m)[3][3]) {
    const Real w = q[0], x = q[1], y = q[2], z = q[3];
    m[0][0] = w * w + x * x - y * y - z * z;
    m[0][1] = 2 * (x * y - w * z);
    m[0][2] = 2 * (x * z + w * y);
    m[1][0] = 2 * (x * y + w * z);
    m[1][1] = w * w - x * x + y * y - z * z;
    m[1][2] = 2 * (y * z - w * x);
    m[2][0] = 2 * (x * z - w * y);
    m[2][1] = 2 * (y * z + w * x);
    m[2][2] = w * w - x * x - y * y + z * z;
}

// d m[i][j] / d (w, x, y, z)
template <typename Real>
void rotation3_jacobian(const Real* q, Real (&dm)[3][3][4]) {
    const Real w = q[0], x = q[1], y = q[2], z = q[3];
    const Real table[3][3][4] = {
        {{2 * w, 2 * x, -2 * y, -2 * z}, {-2 * z, 2 * y, 2 * x, -2 * w}, {2 * y, 2 * z, 2 * w, 2 * x}},
        {{2 * z, 2 * y, 2 * x, 2 * w}, {2 * w, -2 * x, 2 * y, -2 * z}, {-2 * x, -2 * w, 2 * z, 2 * y}},
        {{-2 * y, 2 * z, -2 * w, 2 * x}, {2 * x, 2 * w, 2 * z, 2 * y}, {2 * w, -2 * x, -2 * y, 2 * z}},
    };
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 4; ++k) dm[i][j][k] = table[i][j][k];
}

// Vector-Jacobian product of compose: accumulates dq^T dq/de into de and
// dq^T dq/dr into dr.
template <typename Real>
void compose_backward(ModelFamily f, std::size_t d, const Real* e, const Real* r, const Real* dq, Real* de,
                      Real* dr) {
    switch (f) {
        case ModelFamily::TransE:
            for (std::size_t i = 0; i < d; ++i) {
                de[i] += dq[i];
                dr[i] += dq[i];
            }
            return;
        case ModelFamily::CP:
            for (std::size_t i = 0; i < d; ++i) {
                de[i] += dq[i] * r[i];
                dr[i] += dq[i] * e[i];
            }
            return;
        case ModelFamily::ComplEx:
        case ModelFamily::RotatE:
            for (std::size_t k = 0; k < d; ++k) {
                const Real a = e[2 * k], b = e[2 * k + 1], c = r[2 * k], s = r[2 * k + 1];
                const Real x = dq[2 * k], y = dq[2 * k + 1];
                de[2 * k] += x * c + y * s;
                de[2 * k + 1] += -x * s + y * c;
                dr[2 * k] += x * a + y * b;
                dr[2 * k + 1] += -x * b + y * a;
            }
            return;
        case ModelFamily::RESCAL:
            for (std::size_t i = 0; i < d; ++i) {
                const Real* row = r + i * d;
                Real* drow = dr + i * d;
                Real acc = 0;
                for (std::size_t j = 0; j < d; ++j) {
                    acc += row[j] * dq[j];
                    drow[j] += e[i] * dq[j];
                }
                de[i] += acc;
            }
            return;
        case ModelFamily::RotE: {
            const std::size_t half = d / 2;
            Real* dshift = dr + half;
            for (std::size_t k = 0; k < half; ++k) {
                const Real x = e[2 * k], y = e[2 * k + 1];
                const Real c = std::cos(r[k]), s = std::sin(r[k]);
                const Real g0 = dq[2 * k], g1 = dq[2 * k + 1];
                de[2 * k] += c * g0 + s * g1;
                de[2 * k + 1] += -s * g0 + c * g1;
                dr[k] += g0 * (-s * x - c * y) + g1 * (c * x - s * y);
                dshift[2 * k] += g0;
                dshift[2 * k + 1] += g1;
            }
            return;
        }
        case ModelFamily::QuatE:
            for (std::size_t k = 0; k < d; ++k) {
                const Real a = e[4 * k], b = e[4 * k + 1], c = e[4 * k + 2], dd = e[4 * k + 3];
                const Real p = r[4 * k], u = r[4 * k + 1], v = r[4 * k + 2], w = r[4 * k + 3];
                const Real W = dq[4 * k], X = dq[4 * k + 1], Y = dq[4 * k + 2], Z = dq[4 * k + 3];
                de[4 * k] += W * p + X * u + Y * v + Z * w;
                de[4 * k + 1] += -W * u + X * p - Y * w + Z * v;
                de[4 * k + 2] += -W * v + X * w + Y * p - Z * u;
                de[4 * k + 3] += -W * w - X * v + Y * u + Z * p;
                dr[4 * k] += W * a + X * b + Y * c + Z * dd;
                dr[4 * k + 1] += -W * b + X * a + Y * dd - Z * c;
                dr[4 * k + 2] += -W * c - X * dd + Y * a + Z * b;
                dr[4 * k + 3] += -W * dd + X * c - Y * b + Z * a;
            }
            return;
        case ModelFamily::UniBiO2:
            for (std::size_t k = 0; k < d / 2; ++k) {
                const Real x = e[2 * k], y = e[2 * k + 1];
                const Real c = std::cos(r[2 * k]), s = std::sin(r[2 * k]), sigma = r[2 * k + 1];
                const Real g0 = dq[2 * k], g1 = dq[2 * k + 1];
                de[2 * k] += sigma * (c * g0 - s * g1);
                de[2 * k + 1] += sigma * (s * g0 + c * g1);
                dr[2 * k] += sigma * (g0 * (-s * x + c * y) + g1 * (-c * x - s * y));
                dr[2 * k + 1] += g0 * (c * x + s * y) + g1 * (-s * x + c * y);
            }
            return;
        case ModelFamily::UniBiO3:
            for (std::size_t k = 0; k < d / 3; ++k) {
                const Real* quat = r + 5 * k;
                Real m[3][3];
                Real dm[3][3][4];
                rotation3(quat, m);
                rotation3_jacobian(quat, dm);
                const Real sigma = quat[4];
                const Real* h = e + 3 * k;
                const Real* g = dq + 3 * k;
                Real* dh = de + 3 * k;
                Real* dquat = dr + 5 * k;
                for (std::size_t i = 0; i < 3; ++i) {
                    Real acc = 0;
                    for (std::size_t j = 0; j < 3; ++j) {
                        acc += m[i][j] * g[j];
                        const Real dmij = sigma * h[i] * g[j];
                        for (std::size_t c = 0; c < 4; ++c) dquat[c] += dmij * dm[i][j][c];
                    }
                    dh[i] += sigma * acc;
                }
                Real dsigma = 0;
                for (std::size_t j = 0; j < 3; ++j)
                    dsigma += g[j] * (m[0][j] * h[0] + m[1][j] * h[1] + m[2][j] * h[2]);
                dquat[4] += dsigma;
            }
            return;
    }
}

}  // namespace kernels
}  // namespace pkgc
