#pragma once
// Flat key=value experiment configuration shared by the CLI subcommands.
//
// Keys are the long flag names without the leading dashes, so every flag
// can also be written in a config file and vice versa. Unknown keys are
// rejected. `effective()` renders the resolved configuration for the echo
// written next to every run's outputs.

#include <charconv>
#include <cstdlib>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pkgc/errors.hpp"
#include "pkgc/kge/family.hpp"
#include "pkgc/miner.hpp"
#include "pkgc/runner.hpp"
#include "pkgc/trainer.hpp"

namespace pkgc {

struct ExperimentConfig {
    // Data. `dataset` is a manifest file, a directory with train/valid/test
    // splits, `wn18`/`fb15k` (resolved via PKGC_WN18_DIR / PKGC_FB15K_DIR),
    // or `synthetic:E,R,C,F[,seed]`.
    std::string dataset;
    double rho = 0.7;
    std::uint64_t partition_seed = 0;
    std::string svf = "auto";  // class file, `off`, or `auto` (manifest classes if any)

    // Model and training.
    ModelFamily model = ModelFamily::ComplEx;
    std::size_t dim = 500;
    double lr = 0.001;
    double incremental_lr = 0.001;
    std::size_t batch_size = 1000;
    std::size_t epochs = 100;
    std::size_t incremental_epochs = 20;
    std::string reg = "auto";         // f2 | dura | auto (tuned per family)
    std::string reg_weight = "auto";  // number | auto
    double mu = 0.001;
    std::uint64_t seed = 0;

    // Mining.
    std::size_t nc = 1000;
    std::size_t b_m_max = 10000;
    bool warm_up = true;
    bool root_filter = true;
    bool rel_norm = false;

    // Loop.
    std::size_t ns = 50;
    UpdateMode update = UpdateMode::None;
    std::size_t delta_s = 5;
    std::string k = "auto";  // step for CR@k; auto: 200 on FB15k-like data, else 50

    // Verification and I/O.
    std::string verifier = "oracle";  // oracle | session
    std::string serve;                // host:port for the verify API
    std::size_t verify_timeout_ms = 3'600'000;
    std::string session_id;           // generated when empty
    std::string out = "out";
    std::string checkpoint;           // default <out>/model.ckpt
    bool pretrain = false;            // run: pretrain instead of loading a checkpoint
    bool resume = false;              // run: continue from <out>/state

    [[nodiscard]] bool fb15k_like() const { return dataset.find("fb15k") != std::string::npos; }

    [[nodiscard]] RegDefault regularization() const {
        auto tuned = tuned_regularization(model, fb15k_like());
        RegDefault out = tuned;
        if (reg != "auto") {
            auto kind = parse_reg(reg);
            if (!kind) throw ConfigError("reg must be f2, dura or auto, got '" + reg + "'");
            out.kind = *kind;
        }
        if (reg_weight != "auto") {
            try {
                std::size_t pos = 0;
                out.lambda = std::stod(reg_weight, &pos);
                if (pos != reg_weight.size()) throw std::invalid_argument(reg_weight);
            } catch (const std::logic_error&) {
                throw ConfigError("reg-weight must be a number or auto, got '" + reg_weight + "'");
            }
            if (out.lambda < 0) throw ConfigError("reg-weight must be non-negative");
        }
        return out;
    }

    [[nodiscard]] std::size_t k_report() const {
        if (k == "auto") return std::min<std::size_t>(fb15k_like() ? 200 : 50, ns);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(k.data(), k.data() + k.size(), v);
        if (ec != std::errc() || p != k.data() + k.size()) throw ConfigError("k must be an integer or auto");
        return v;
    }

    [[nodiscard]] std::string checkpoint_path() const { return checkpoint.empty() ? out + "/model.ckpt" : checkpoint; }

    [[nodiscard]] TrainConfig train_config() const {
        TrainConfig t;
        t.learning_rate = lr;
        t.incremental_learning_rate = incremental_lr;
        t.batch_size = batch_size;
        t.max_epochs = epochs;
        t.incremental_epochs = incremental_epochs;
        const auto r = regularization();
        t.reg_kind = r.kind;
        t.lambda = r.lambda;
        t.mu = mu;
        t.dim = dim;
        t.seed = seed;
        return t;
    }

    [[nodiscard]] MiningConfig mining_config() const {
        MiningConfig m;
        m.n_c = nc;
        m.b_m_max = b_m_max;
        m.warm_up = warm_up;
        m.root_filter = root_filter;
        m.svf = svf != "off";
        return m;
    }

    [[nodiscard]] LoopConfig loop_config() const {
        LoopConfig l;
        l.n_s = ns;
        l.n_c = nc;
        l.update_mode = update;
        l.delta_s = delta_s;
        l.k_report = k_report();
        l.rel_norm = rel_norm;
        return l;
    }

    void validate() const {
        if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
        if (dim == 0) throw ConfigError("dim must be positive");
        if (!(lr > 0)) throw ConfigError("lr must be positive");
        if (!(incremental_lr > 0)) throw ConfigError("incremental-lr must be positive");
        if (batch_size == 0) throw ConfigError("batch-size must be positive");
        if (mu < 0) throw ConfigError("mu must be non-negative");
        if (nc == 0) throw ConfigError("nc must be positive");
        if (b_m_max == 0) throw ConfigError("b-m-max must be positive");
        if (delta_s == 0) throw ConfigError("delta-s must be positive");
        if (verifier != "oracle" && verifier != "session") throw ConfigError("verifier must be oracle or session");
        if (verifier == "session" && serve.empty()) throw ConfigError("verifier=session needs serve=<host:port>");
        if (k_report() > ns) throw ConfigError("k must not exceed ns");
        (void)regularization();
        (void)family_layout(model, dim);
    }
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key + " expects true/false, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    std::from_chars_result r;
    if constexpr (std::is_floating_point_v<T>) {
        // from_chars for doubles is available but strtod accepts the same inputs users expect.
        char* stop = nullptr;
        out = static_cast<T>(std::strtod(v.c_str(), &stop));
        if (v.empty() || stop != end) throw ConfigError(key + " expects a number, got '" + v + "'");
        return out;
    } else {
        r = std::from_chars(v.data(), end, out);
        if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + " expects a non-negative integer, got '" + v + "'");
        return out;
    }
}

inline std::string fmt_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

}  // namespace detail

// One entry per configuration key: name, help text, and string accessors.
struct ConfigKey {
    std::string name;
    std::string help;
    bool is_flag = false;  // boolean switch on the command line
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys() {
    using C = ExperimentConfig;
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        auto str = [&](std::string name, std::string help, std::string C::*m) {
            k.push_back({std::move(name), std::move(help), false,
                         [m](C& c, const std::string& v) { c.*m = v; }, [m](const C& c) { return c.*m; }});
        };
        auto size = [&](std::string name, std::string help, std::size_t C::*m) {
            k.push_back({name, std::move(help), false,
                         [m, name](C& c, const std::string& v) { c.*m = detail::parse_number<std::size_t>(name, v); },
                         [m](const C& c) { return std::to_string(c.*m); }});
        };
        auto u64 = [&](std::string name, std::string help, std::uint64_t C::*m) {
            k.push_back({name, std::move(help), false,
                         [m, name](C& c, const std::string& v) { c.*m = detail::parse_number<std::uint64_t>(name, v); },
                         [m](const C& c) { return std::to_string(c.*m); }});
        };
        auto real = [&](std::string name, std::string help, double C::*m) {
            k.push_back({name, std::move(help), false,
                         [m, name](C& c, const std::string& v) { c.*m = detail::parse_number<double>(name, v); },
                         [m](const C& c) { return detail::fmt_double(c.*m); }});
        };
        auto boolean = [&](std::string name, std::string help, bool C::*m, bool flag) {
            k.push_back({name, std::move(help), flag,
                         [m, name](C& c, const std::string& v) { c.*m = detail::parse_bool(name, v); },
                         [m](const C& c) { return std::string(c.*m ? "true" : "false"); }});
        };

        str("dataset", "manifest file, split directory, wn18, fb15k or synthetic:E,R,C,F[,seed]", &C::dataset);
        real("rho", "initial known ratio in (0, 1]", &C::rho);
        u64("partition-seed", "shuffle seed of the partition", &C::partition_seed);
        str("svf", "class file, off, or auto", &C::svf);
        k.push_back({"model", "transe|cp|complex|rescal|rotate|rote|quate|unibi-o2|unibi-o3", false,
                     [](C& c, const std::string& v) {
                         auto f = parse_family(v);
                         if (!f) throw ConfigError("unknown model '" + v + "'");
                         c.model = *f;
                     },
                     [](const C& c) { return std::string(family_name(c.model)); }});
        size("dim", "embedding dimension", &C::dim);
        real("lr", "Adagrad learning rate for pretraining", &C::lr);
        real("incremental-lr", "Adagrad learning rate for retrain and finetune updates", &C::incremental_lr);
        size("batch-size", "training batch size", &C::batch_size);
        size("epochs", "pretraining epochs", &C::epochs);
        size("incremental-epochs", "epochs per incremental update", &C::incremental_epochs);
        str("reg", "f2, dura, or auto (tuned per model)", &C::reg);
        str("reg-weight", "regularization weight, or auto", &C::reg_weight);
        real("mu", "drift penalty weight during updates", &C::mu);
        u64("seed", "training seed", &C::seed);
        size("nc", "candidates verified per step", &C::nc);
        size("b-m-max", "maximum mining batch size (queries)", &C::b_m_max);
        boolean("warm-up", "grow mining batches from 1", &C::warm_up, false);
        boolean("root-filter", "discard candidates below the heap root", &C::root_filter, false);
        boolean("rel-norm", "mine with unit-norm relation rows (cp, complex)", &C::rel_norm, false);
        size("ns", "number of loop steps", &C::ns);
        k.push_back({"update", "none|retrain|finetune", false,
                     [](C& c, const std::string& v) {
                         auto m = parse_update_mode(v);
                         if (!m) throw ConfigError("update must be none, retrain or finetune, got '" + v + "'");
                         c.update = *m;
                     },
                     [](const C& c) { return std::string(update_mode_name(c.update)); }});
        size("delta-s", "update every delta-s steps", &C::delta_s);
        str("k", "step reported as cr_at_k, or auto", &C::k);
        str("verifier", "oracle|session", &C::verifier);
        str("serve", "host:port for the verify API", &C::serve);
        size("verify-timeout-ms", "per-step verification deadline", &C::verify_timeout_ms);
        str("session-id", "verification session id (generated when empty)", &C::session_id);
        str("out", "output directory", &C::out);
        str("checkpoint", "model checkpoint path (default <out>/model.ckpt)", &C::checkpoint);
        boolean("pretrain", "pretrain before running instead of loading a checkpoint", &C::pretrain, true);
        boolean("resume", "continue a run from <out>/state", &C::resume, true);
        return k;
    }();
    return keys;
}

inline const ConfigKey* find_config_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return &k;
    return nullptr;
}

inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const auto* k = find_config_key(key);
    if (!k) throw ConfigError("unknown config key '" + key + "'");
    k->set(cfg, value);
}

inline void apply_config_file(ExperimentConfig& cfg, std::istream& in, const std::string& source = "<config>") {
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, lineno, "expected key=value");
        const auto key = trim(line.substr(0, eq));
        if (!find_config_key(key)) throw ParseError(source, lineno, "unknown config key '" + key + "'");
        try {
            set_config_value(cfg, key, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
}

inline void write_effective_config(std::ostream& out, const ExperimentConfig& cfg) {
    for (const auto& k : config_keys()) out << k.name << '=' << k.get(cfg) << '\n';
}

}  // namespace pkgc
