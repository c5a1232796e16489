#pragma once
// Dataset resolution for the CLI: manifests, split directories, the
// WN18/FB15k environment lookup, and synthetic graphs.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "pkgc/errors.hpp"
#include "pkgc/kg_store.hpp"
#include "pkgc/synthetic.hpp"

namespace pkgc {

struct Dataset {
    std::string name;
    Vocabulary vocab;
    FactSet facts;
    std::optional<ClassDict> classes;
    std::optional<double> rho;             // from a manifest
    std::optional<std::uint64_t> seed;     // from a manifest
};

// `synthetic:E,R,C,F[,seed]`: entities, relations, classes, facts per relation.
inline Dataset load_synthetic_dataset(const std::string& spec_text) {
    const std::string body = spec_text.substr(spec_text.find(':') + 1);
    std::vector<std::uint64_t> v;
    std::size_t start = 0;
    while (start <= body.size()) {
        const auto comma = body.find(',', start);
        const auto part = body.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t pos = 0;
            v.push_back(std::stoull(part, &pos));
            if (pos != part.size()) throw std::invalid_argument(part);
        } catch (const std::logic_error&) {
            throw ConfigError("bad synthetic dataset spec '" + spec_text + "' (expected synthetic:E,R,C,F[,seed])");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (v.size() != 4 && v.size() != 5)
        throw ConfigError("bad synthetic dataset spec '" + spec_text + "' (expected synthetic:E,R,C,F[,seed])");
    SyntheticSpec s;
    s.n_entities = v[0];
    s.n_relations = v[1];
    s.n_classes = v[2];
    s.facts_per_relation = v[3];
    if (v.size() == 5) s.seed = v[4];
    auto kg = make_synthetic_kg(s);
    Dataset d;
    d.name = spec_text;
    d.vocab = std::move(kg.vocab);
    d.facts = std::move(kg.facts);
    d.classes = std::move(kg.classes);
    return d;
}

// Union of the standard splits (train/valid/test with .txt or .tsv suffix).
inline Dataset load_split_directory(const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    Dataset d;
    d.name = name;
    bool any = false;
    for (const char* split : {"train", "valid", "test"}) {
        for (const char* ext : {".txt", ".tsv"}) {
            const fs::path p = fs::path(dir) / (std::string(split) + ext);
            if (fs::exists(p)) {
                d.facts.merge(load_triples(p.string(), d.vocab));
                any = true;
                break;
            }
        }
    }
    if (!any) throw DataError("no train/valid/test split files in " + dir);
    for (const char* cls : {"classes.tsv", "entity2type.txt"}) {
        const fs::path p = fs::path(dir) / cls;
        if (fs::exists(p)) {
            d.classes = load_class_dict(p.string(), d.vocab);
            break;
        }
    }
    return d;
}

inline Dataset load_dataset(const std::string& spec) {
    namespace fs = std::filesystem;
    if (spec.empty()) throw ConfigError("no dataset given");
    if (spec.rfind("synthetic:", 0) == 0) return load_synthetic_dataset(spec);
    if (spec == "wn18" || spec == "fb15k" || spec == "fb15k-237") {
        std::string var = spec == "wn18" ? "PKGC_WN18_DIR" : "PKGC_FB15K_DIR";
        const char* dir = std::getenv(var.c_str());
        if (!dir || !*dir) throw DataError("dataset " + spec + " needs " + var + " pointing at its split directory");
        return load_split_directory(dir, spec);
    }
    if (!fs::exists(spec)) throw DataError("dataset not found: " + spec);
    if (fs::is_directory(spec)) return load_split_directory(spec, spec);

    const auto m = load_manifest(spec);
    Dataset d;
    d.name = spec;
    d.facts = load_triples(m.triples_path, d.vocab);
    if (!m.classes_path.empty()) d.classes = load_class_dict(m.classes_path, d.vocab);
    d.rho = m.rho;
    d.seed = m.seed;
    return d;
}

}  // namespace pkgc
