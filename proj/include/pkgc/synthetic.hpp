#pragma once
// Typed synthetic knowledge graphs for tests and mining benchmarks.
//
// Every entity gets one of `n_classes` classes (or none, with probability
// `classless_fraction`); every relation has a domain and a range class.
// Facts connect a domain entity to a range entity through a per-relation
// affine map on class-local indices, plus a fraction of uniformly random
// tails, so the graph carries structure a model can learn.

#include <algorithm>
#include <random>

#include "pkgc/kg_store.hpp"

namespace pkgc {

struct SyntheticSpec {
    std::size_t n_entities = 100;
    std::size_t n_relations = 5;
    std::size_t n_classes = 4;
    std::size_t facts_per_relation = 50;
    double classless_fraction = 0.0;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

struct SyntheticKG {
    Vocabulary vocab;
    FactSet facts;
    ClassDict classes;
};

inline SyntheticKG make_synthetic_kg(const SyntheticSpec& spec) {
    if (spec.n_entities == 0 || spec.n_relations == 0 || spec.n_classes == 0)
        throw ConfigError("synthetic graph needs entities, relations and classes");
    std::mt19937_64 rng(spec.seed);
    SyntheticKG kg;
    kg.vocab = Vocabulary::anonymous(spec.n_entities, spec.n_relations);
    kg.classes.resize(spec.n_entities);
    for (std::size_t c = 0; c < spec.n_classes; ++c) kg.classes.intern_class("c" + std::to_string(c));

    // Class membership by round robin keeps every class populated; the
    // classless draw is independent of it.
    std::vector<std::vector<EntityId>> members(spec.n_classes);
    std::bernoulli_distribution classless(spec.classless_fraction);
    for (std::size_t e = 0; e < spec.n_entities; ++e) {
        auto c = static_cast<ClassId>(e % spec.n_classes);
        members[c].push_back(static_cast<EntityId>(e));
        if (!classless(rng)) kg.classes.assign(static_cast<EntityId>(e), c);
    }

    std::uniform_int_distribution<std::size_t> pick_class(0, spec.n_classes - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t r = 0; r < spec.n_relations; ++r) {
        const auto& dom = members[pick_class(rng)];
        const auto& ran = members[pick_class(rng)];
        const std::size_t mult = 1 + 2 * std::uniform_int_distribution<std::size_t>(0, 3)(rng);
        const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, ran.size() - 1)(rng);
        std::uniform_int_distribution<std::size_t> pick_dom(0, dom.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_ran(0, ran.size() - 1);
        for (std::size_t k = 0; k < spec.facts_per_relation; ++k) {
            const std::size_t hi = pick_dom(rng);
            const std::size_t ti = unit(rng) < spec.noise ? pick_ran(rng) : (hi * mult + offset) % ran.size();
            kg.facts.insert(Triple{dom[hi], static_cast<RelationId>(r), ran[ti]});
        }
    }
    return kg;
}

}  // namespace pkgc
