#pragma once
// Binary checkpoint format, version 1. All fields little-endian:
//
//   offset  size  field
//   0       8     magic "PKGCEMB\0"
//   8       4     u32 format version (1)
//   12      4     u32 family tag (ModelFamily enumerator value)
//   16      4     u32 dim
//   20      4     u32 |E|
//   24      4     u32 |R| (canonical relations; the table stores 2|R| rows)
//   28      4     f32 gamma
//   32      ...   f32 entity table, |E| rows x entity_width, row-major
//   ...     ...   f32 relation table, 2|R| rows x relation_width, row-major
//
// Widths follow from (family, dim); see family.hpp.

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "pkgc/errors.hpp"
#include "pkgc/kge/model.hpp"

namespace pkgc {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr std::array<char, 8> kCheckpointMagic = {'P', 'K', 'G', 'C', 'E', 'M', 'B', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError("checkpoint truncated");
    return value;
}

template <typename Real>
void write_table(std::ostream& out, const RowMatrix<Real>& m) {
    if constexpr (std::is_same_v<Real, float>) {
        out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    } else {
        for (Eigen::Index i = 0; i < m.size(); ++i) write_pod(out, static_cast<float>(m.data()[i]));
    }
}

template <typename Real>
void read_table(std::istream& in, RowMatrix<Real>& m) {
    if constexpr (std::is_same_v<Real, float>) {
        if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float))))
            throw DataError("checkpoint truncated");
    } else {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(read_pod<float>(in));
    }
}

}  // namespace detail

template <typename Real>
void save_checkpoint(std::ostream& out, const EmbeddingModel<Real>& model) {
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    detail::write_pod(out, kCheckpointVersion);
    detail::write_pod(out, static_cast<std::uint32_t>(model.family()));
    detail::write_pod(out, static_cast<std::uint32_t>(model.dim()));
    detail::write_pod(out, static_cast<std::uint32_t>(model.num_entities()));
    detail::write_pod(out, static_cast<std::uint32_t>(model.num_relations()));
    detail::write_pod(out, static_cast<float>(model.gamma()));
    detail::write_table(out, model.entities());
    detail::write_table(out, model.relations());
    if (!out) throw DataError("checkpoint write failed");
}

template <typename Real>
void save_checkpoint(const std::string& path, const EmbeddingModel<Real>& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    save_checkpoint(out, model);
}

template <typename Real = float>
EmbeddingModel<Real> load_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) throw DataError("not a checkpoint file");
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
    const auto tag = detail::read_pod<std::uint32_t>(in);
    if (tag > static_cast<std::uint32_t>(ModelFamily::UniBiO3)) throw DataError("unknown family tag");
    const auto dim = detail::read_pod<std::uint32_t>(in);
    const auto n_entities = detail::read_pod<std::uint32_t>(in);
    const auto n_relations = detail::read_pod<std::uint32_t>(in);
    const auto gamma = detail::read_pod<float>(in);
    EmbeddingModel<Real> model(static_cast<ModelFamily>(tag), dim, n_entities, n_relations);
    model.set_gamma(static_cast<Real>(gamma));
    detail::read_table(in, model.entities());
    detail::read_table(in, model.relations());
    return model;
}

template <typename Real = float>
EmbeddingModel<Real> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return load_checkpoint<Real>(in);
}

}  // namespace pkgc
