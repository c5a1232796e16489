#pragma once
// Loading, indexing and partitioning of knowledge graphs.

#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pkgc/errors.hpp"
#include "pkgc/triple.hpp"

namespace pkgc {

// Bidirectional name <-> dense id map. Ids are assigned in first-seen order.
class NameIndex {
public:
    std::uint32_t intern(std::string_view name) {
        auto it = ids_.find(std::string(name));
        if (it != ids_.end()) return it->second;
        auto id = static_cast<std::uint32_t>(names_.size());
        names_.emplace_back(name);
        ids_.emplace(names_.back(), id);
        return id;
    }

    [[nodiscard]] std::optional<std::uint32_t> find(std::string_view name) const {
        auto it = ids_.find(std::string(name));
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] const std::string& name(std::uint32_t id) const { return names_.at(id); }
    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

struct Vocabulary {
    NameIndex entities;
    NameIndex relations;

    [[nodiscard]] std::size_t num_entities() const noexcept { return entities.size(); }
    [[nodiscard]] std::size_t num_relations() const noexcept { return relations.size(); }

    // Anonymous vocabulary "e0".."eN", "r0".."rM"; used by synthetic graphs.
    static Vocabulary anonymous(std::size_t n_entities, std::size_t n_relations) {
        Vocabulary v;
        for (std::size_t i = 0; i < n_entities; ++i) v.entities.intern("e" + std::to_string(i));
        for (std::size_t i = 0; i < n_relations; ++i) v.relations.intern("r" + std::to_string(i));
        return v;
    }
};

using ClassId = std::uint32_t;

class ClassDict {
public:
    ClassDict() = default;
    explicit ClassDict(std::size_t n_entities) : class_of_(n_entities) {}

    void resize(std::size_t n_entities) { class_of_.resize(n_entities); }

    // Keeps the first assignment; returns false when the entity already had one.
    bool assign(EntityId e, ClassId c) {
        if (e >= class_of_.size()) class_of_.resize(e + 1);
        if (class_of_[e]) return false;
        class_of_[e] = c;
        return true;
    }

    ClassId intern_class(std::string_view name) { return classes_.intern(name); }

    [[nodiscard]] std::optional<ClassId> class_of(EntityId e) const {
        return e < class_of_.size() ? class_of_[e] : std::nullopt;
    }

    [[nodiscard]] std::size_t num_classes() const noexcept { return classes_.size(); }
    [[nodiscard]] const NameIndex& class_names() const noexcept { return classes_; }

    std::size_t skipped_unknown_entities = 0;
    std::size_t duplicate_assignments = 0;

private:
    std::vector<std::optional<ClassId>> class_of_;
    NameIndex classes_;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

}  // namespace detail

// Reads `head<TAB>relation<TAB>tail` lines, extending `vocab` with unseen
// names. Blank lines are ignored; any other line without exactly three
// fields is a parse error.
inline FactSet load_triples(std::istream& in, Vocabulary& vocab, const std::string& source = "<stream>") {
    FactSet facts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto view = detail::strip_cr(line);
        if (view.empty()) continue;
        auto fields = detail::split_tabs(view);
        if (fields.size() != 3)
            throw ParseError(source, lineno, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
        auto h = vocab.entities.intern(fields[0]);
        auto r = vocab.relations.intern(fields[1]);
        auto t = vocab.entities.intern(fields[2]);
        if (vocab.num_entities() > kMaxEntities || vocab.num_relations() > kMaxRelations)
            throw ParseError(source, lineno, "vocabulary exceeds packed id range");
        facts.insert(Triple{h, r, t});
    }
    return facts;
}

inline FactSet load_triples(const std::string& path, Vocabulary& vocab) {
    auto in = detail::open_or_throw(path);
    return load_triples(in, vocab, path);
}

// `entity<TAB>class` lines. Unknown entities are skipped and counted; an
// entity listed twice keeps its first class.
inline ClassDict load_class_dict(std::istream& in, const Vocabulary& vocab, const std::string& source = "<stream>") {
    ClassDict dict(vocab.num_entities());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto view = detail::strip_cr(line);
        if (view.empty()) continue;
        auto fields = detail::split_tabs(view);
        if (fields.size() != 2)
            throw ParseError(source, lineno, "expected 2 tab-separated fields, got " + std::to_string(fields.size()));
        auto e = vocab.entities.find(fields[0]);
        if (!e) {
            ++dict.skipped_unknown_entities;
            continue;
        }
        auto c = dict.intern_class(fields[1]);
        if (!dict.assign(*e, c)) ++dict.duplicate_assignments;
    }
    return dict;
}

inline ClassDict load_class_dict(const std::string& path, const Vocabulary& vocab) {
    auto in = detail::open_or_throw(path);
    return load_class_dict(in, vocab, path);
}

struct PartitionConfig {
    double rho = 1.0;
    std::uint64_t seed = 0;
};

struct Partition {
    FactSet known;
    FactSet unexplored;
    std::size_t scaffold_size = 0;
};

// Scaffold-first split. One pass over the facts in ascending packed order
// collects every fact that introduces an unseen entity or relation; the
// remaining facts are shuffled by `seed`, the first |total| - n become the
// unexplored set and the rest join the scaffold as the known set, with
// n = floor(|total| * rho).
inline Partition partition(const FactSet& total, const PartitionConfig& cfg) {
    if (!(cfg.rho > 0.0 && cfg.rho <= 1.0)) throw ConfigError("rho must lie in (0, 1], got " + std::to_string(cfg.rho));
    if (total.empty()) throw DataError("cannot partition an empty fact set");

    const auto ordered = total.sorted();
    std::unordered_set<EntityId> seen_entities;
    std::unordered_set<RelationId> seen_relations;
    std::vector<Triple> scaffold;
    std::vector<Triple> remainder;
    for (const auto& f : ordered) {
        if (!seen_entities.contains(f.head) || !seen_entities.contains(f.tail) ||
            !seen_relations.contains(f.relation)) {
            seen_entities.insert(f.head);
            seen_entities.insert(f.tail);
            seen_relations.insert(f.relation);
            scaffold.push_back(f);
        } else {
            remainder.push_back(f);
        }
    }

    const std::size_t n_total = ordered.size();
    // The epsilon absorbs representation error in rho (0.9 * 592210 must be 532989).
    const auto n = static_cast<std::size_t>(std::floor(static_cast<long double>(n_total) * cfg.rho + 1e-9L));
    if (n < scaffold.size())
        throw InfeasibleRatio(cfg.rho, static_cast<double>(scaffold.size()) / static_cast<double>(n_total));

    std::mt19937_64 rng(cfg.seed);
    std::shuffle(remainder.begin(), remainder.end(), rng);

    Partition out;
    out.scaffold_size = scaffold.size();
    const std::size_t n_unexplored = n_total - n;
    out.unexplored.reserve(n_unexplored);
    out.known.reserve(n);
    for (std::size_t i = 0; i < remainder.size(); ++i) {
        if (i < n_unexplored)
            out.unexplored.insert(remainder[i]);
        else
            out.known.insert(remainder[i]);
    }
    for (const auto& f : scaffold) out.known.insert(f);
    return out;
}

// Held-out split of the known facts for the optional hyperparameter search.
inline std::pair<FactSet, FactSet> split_train_valid(const FactSet& known, double valid_fraction, std::uint64_t seed) {
    auto facts = known.sorted();
    std::mt19937_64 rng(seed);
    std::shuffle(facts.begin(), facts.end(), rng);
    const auto n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(facts.size()) * valid_fraction));
    FactSet train, valid;
    for (std::size_t i = 0; i < facts.size(); ++i) (i < n_valid ? valid : train).insert(facts[i]);
    return {std::move(train), std::move(valid)};
}

// Dataset manifest: plain `key=value` lines (triples_path, classes_path, rho, seed).
// Relative paths resolve against the manifest's directory.
struct DatasetManifest {
    std::string triples_path;
    std::string classes_path;
    std::optional<double> rho;
    std::optional<std::uint64_t> seed;
};

inline DatasetManifest load_manifest(const std::string& path) {
    auto in = detail::open_or_throw(path);
    DatasetManifest m;
    const auto slash = path.find_last_of('/');
    const std::string base = slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
    auto resolve = [&](std::string p) { return (!p.empty() && p.front() != '/') ? base + p : p; };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto view = detail::strip_cr(line);
        if (view.empty() || view.front() == '#') continue;
        auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParseError(path, lineno, "expected key=value");
        std::string key(view.substr(0, eq));
        std::string value(view.substr(eq + 1));
        try {
            if (key == "triples_path")
                m.triples_path = resolve(value);
            else if (key == "classes_path")
                m.classes_path = value.empty() ? value : resolve(value);
            else if (key == "rho")
                m.rho = std::stod(value);
            else if (key == "seed")
                m.seed = std::stoull(value);
            else
                throw ParseError(path, lineno, "unknown manifest key '" + key + "'");
        } catch (const std::logic_error&) {
            throw ParseError(path, lineno, "bad value for '" + key + "'");
        }
    }
    if (m.triples_path.empty()) throw ParseError(path, lineno, "manifest lacks triples_path");
    return m;
}

// Facts as `h<TAB>r<TAB>t` integer ids, ascending packed order.
inline void write_fact_ids(std::ostream& out, const FactSet& facts) {
    for (const auto& f : facts.sorted()) out << f.head << '\t' << f.relation << '\t' << f.tail << '\n';
}

inline FactSet read_fact_ids(std::istream& in, const std::string& source = "<stream>") {
    FactSet facts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Triple f;
        if (!(ss >> f.head >> f.relation >> f.tail)) throw ParseError(source, lineno, "expected three integer ids");
        facts.insert(f);
    }
    return facts;
}

}  // namespace pkgc
