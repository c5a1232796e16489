#pragma once
// Facts and fact sets.
//
// A Triple is always canonical (forward relation id). Sets are keyed on a
// packed 64-bit integer: 24 bits head, 16 bits relation, 24 bits tail.
// Ascending packed id is the deterministic tie-break used by the miner.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace pkgc {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using PackedTriple = std::uint64_t;

inline constexpr std::uint32_t kMaxEntities = 1u << 24;
inline constexpr std::uint32_t kMaxRelations = 1u << 16;

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    friend constexpr bool operator==(const Triple&, const Triple&) = default;
    friend constexpr auto operator<=>(const Triple&, const Triple&) = default;
};

constexpr PackedTriple pack(const Triple& f) noexcept {
    return (static_cast<PackedTriple>(f.head) << 40) |
           (static_cast<PackedTriple>(f.relation) << 24) |
           static_cast<PackedTriple>(f.tail);
}

constexpr Triple unpack(PackedTriple key) noexcept {
    return Triple{static_cast<EntityId>(key >> 40),
                  static_cast<RelationId>((key >> 24) & 0xFFFFu),
                  static_cast<EntityId>(key & 0xFFFFFFu)};
}

// Hash-set of canonical facts. Membership and insertion are the hot path.
class FactSet {
public:
    using container = std::unordered_set<PackedTriple>;

    FactSet() = default;
    FactSet(std::initializer_list<Triple> facts) {
        for (const auto& f : facts) insert(f);
    }

    bool insert(const Triple& f) { return keys_.insert(pack(f)).second; }
    bool insert_packed(PackedTriple key) { return keys_.insert(key).second; }
    bool erase(const Triple& f) { return keys_.erase(pack(f)) > 0; }

    [[nodiscard]] bool contains(const Triple& f) const { return keys_.contains(pack(f)); }
    [[nodiscard]] bool contains_packed(PackedTriple key) const { return keys_.contains(key); }

    [[nodiscard]] std::size_t size() const noexcept { return keys_.size(); }
    [[nodiscard]] bool empty() const noexcept { return keys_.empty(); }
    void reserve(std::size_t n) { keys_.reserve(n); }
    void clear() noexcept { keys_.clear(); }

    void merge(const FactSet& other) {
        for (auto key : other.keys_) keys_.insert(key);
    }

    [[nodiscard]] const container& keys() const noexcept { return keys_; }

    // Facts in ascending packed order; used wherever iteration order must be
    // reproducible (partitioning, file output, epoch shuffles).
    [[nodiscard]] std::vector<Triple> sorted() const {
        std::vector<PackedTriple> tmp(keys_.begin(), keys_.end());
        std::sort(tmp.begin(), tmp.end());
        std::vector<Triple> out;
        out.reserve(tmp.size());
        for (auto key : tmp) out.push_back(unpack(key));
        return out;
    }

    friend bool operator==(const FactSet& a, const FactSet& b) { return a.keys_ == b.keys_; }

private:
    container keys_;
};

inline FactSet set_union(const FactSet& a, const FactSet& b) {
    FactSet out = a;
    out.merge(b);
    return out;
}

inline FactSet set_intersection(const FactSet& a, const FactSet& b) {
    const FactSet& small = a.size() <= b.size() ? a : b;
    const FactSet& large = a.size() <= b.size() ? b : a;
    FactSet out;
    for (auto key : small.keys())
        if (large.contains_packed(key)) out.insert_packed(key);
    return out;
}

}  // namespace pkgc
