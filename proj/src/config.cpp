#include "repplab/config.hpp"

#include "repplab/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace repplab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": " + v);
    }
}

std::int64_t to_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": " + v);
    }
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : split(v, ',')) out.push_back(to_double(tok, key));
    return out;
}

char fmt_buf[64];
std::string fmt(double v) {
    std::snprintf(fmt_buf, sizeof fmt_buf, "%.17g", v);
    return fmt_buf;
}

}  // namespace

double ExperimentConfig::effective_gamma() const {
    if (gamma > 0.0) return gamma;
    const auto* seq = std::get_if<SequentialSystem>(&system);
    const double xi = (seq && seq->perturbed) ? seq->xi : 2.0;
    return default_gamma(xi);
}

std::int64_t ExperimentConfig::k_n_for(std::int64_t n) const {
    return k_n_override > 0 ? k_n_override : default_k_n(n);
}

std::int64_t ExperimentConfig::t_star_for(std::int64_t n) const {
    return t_star_override > 0 ? t_star_override : default_t_star(n);
}

void ExperimentConfig::validate() const {
    observable.validate();
    if (const auto* rnd = std::get_if<RandomLYSystem>(&system)) {
        rnd->validate();
    } else {
        const auto& seq = std::get<SequentialSystem>(system);
        if (!(seq.beta > 1.0)) {
            throw std::invalid_argument("config: system beta must exceed 1");
        }
        if (seq.perturbed && !(seq.xi > 1.0)) {
            throw std::invalid_argument("config: xi must exceed 1");
        }
    }
    if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be positive");
    if (n_grid.empty()) throw std::invalid_argument("config: empty n grid");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 10) throw std::invalid_argument("config: n too small");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
            throw std::invalid_argument("config: n grid must be strictly increasing");
        }
    }
    if (H < 1) throw std::invalid_argument("config: H must be >= 1");
    if (ensemble < 1) throw std::invalid_argument("config: ensemble must be >= 1");
    if (q < 0) throw std::invalid_argument("config: q must be >= 0");
    if (marks.empty()) throw std::invalid_argument("config: no mark types");
    if (period < 1) throw std::invalid_argument("config: period must be >= 1");
    if (grid_cells < 64) throw std::invalid_argument("config: grid_cells must be >= 64");
    // k_n t_n* Fbar_max -> 0: proxy check at the largest n with Fbar_max ~ tau/n
    const std::int64_t nmax = n_grid.back();
    const double proxy = static_cast<double>(k_n_for(nmax)) *
                         static_cast<double>(t_star_for(nmax) + 1) * tau /
                         static_cast<double>(nmax);
    if (proxy >= 5.0) {
        throw std::invalid_argument(
            "config: k_n * t_n* * Fbar_max stays large at the biggest n; "
            "enlarge n or shrink k_n/t_n*");
    }
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    bool system_is_random = false;
    std::vector<double> alphabet, weights;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("config: bad section at line " +
                                            std::to_string(lineno));
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string path = section + "." + key;

        if (path == "system.kind") {
            if (val == "random") {
                system_is_random = true;
            } else if (val != "sequential") {
                throw std::invalid_argument("config: unknown system kind " + val);
            }
        } else if (path == "system.beta") {
            std::get<SequentialSystem>(cfg.system).beta = to_double(val, path);
        } else if (path == "system.perturbed") {
            std::get<SequentialSystem>(cfg.system).perturbed = (val == "true");
        } else if (path == "system.xi") {
            std::get<SequentialSystem>(cfg.system).xi = to_double(val, path);
        } else if (path == "system.perturbation") {
            auto& seq = std::get<SequentialSystem>(cfg.system);
            if (val == "plus") seq.sign = PerturbationSign::plus;
            else if (val == "minus") seq.sign = PerturbationSign::minus;
            else if (val == "alternating") seq.sign = PerturbationSign::alternating;
            else throw std::invalid_argument("config: unknown perturbation " + val);
        } else if (path == "system.alphabet") {
            alphabet = to_doubles(val, path);
        } else if (path == "system.weights") {
            weights = to_doubles(val, path);
        } else if (path == "observable.type") {
            const auto t = to_int(val, path);
            if (t == 1) cfg.observable.type = GType::type1;
            else if (t == 2) cfg.observable.type = GType::type2;
            else if (t == 3) cfg.observable.type = GType::type3;
            else throw std::invalid_argument("config: observable type must be 1..3");
        } else if (path == "observable.zeta") {
            cfg.observable.zeta = to_double(val, path);
        } else if (path == "observable.alpha") {
            cfg.observable.alpha = to_double(val, path);
        } else if (path == "observable.D") {
            cfg.observable.D = to_double(val, path);
        } else if (path == "observable.h_scale") {
            cfg.observable.h_scale = to_double(val, path);
        } else if (path == "theory.zeta_kind") {
            if (val == "periodic") cfg.zeta_kind = ZetaKind::interior_periodic;
            else if (val == "boundary") cfg.zeta_kind = ZetaKind::boundary;
            else if (val == "aperiodic") cfg.zeta_kind = ZetaKind::aperiodic;
            else throw std::invalid_argument("config: unknown zeta_kind " + val);
        } else if (path == "theory.period") {
            cfg.period = static_cast<int>(to_int(val, path));
        } else if (path == "experiment.tau") {
            cfg.tau = to_double(val, path);
        } else if (path == "experiment.n_grid") {
            cfg.n_grid.clear();
            for (const auto& tok : split(val, ',')) {
                cfg.n_grid.push_back(to_int(tok, path));
            }
        } else if (path == "experiment.H") {
            cfg.H = static_cast<int>(to_int(val, path));
        } else if (path == "experiment.ensemble") {
            cfg.ensemble = to_int(val, path);
        } else if (path == "experiment.q") {
            if (val == "estimate") {
                cfg.q_estimate = true;
            } else {
                cfg.q = to_int(val, path);
            }
        } else if (path == "experiment.mark") {
            cfg.marks.clear();
            if (val == "all") {
                cfg.marks = {MarkType::aot, MarkType::pot, MarkType::repp};
            } else {
                for (const auto& tok : split(val, ',')) {
                    cfg.marks.push_back(mark_type_from_name(tok));
                }
            }
        } else if (path == "experiment.gamma") {
            cfg.gamma = (val == "auto") ? 0.0 : to_double(val, path);
        } else if (path == "experiment.seed") {
            cfg.seed = static_cast<std::uint64_t>(to_int(val, path));
        } else if (path == "experiment.k_n") {
            cfg.k_n_override = (val == "default") ? 0 : to_int(val, path);
        } else if (path == "experiment.t_star") {
            cfg.t_star_override = (val == "default") ? 0 : to_int(val, path);
        } else if (path == "experiment.grid_cells") {
            cfg.grid_cells = static_cast<std::size_t>(to_int(val, path));
        } else if (path == "experiment.word_prefix") {
            cfg.word_prefix = static_cast<std::size_t>(to_int(val, path));
        } else if (path == "experiment.mc_samples") {
            cfg.mc_samples = static_cast<std::size_t>(to_int(val, path));
        } else if (path == "experiment.j_max") {
            cfg.j_max = to_int(val, path);
        } else if (path == "experiment.dump_mrepp") {
            cfg.dump_mrepp = to_int(val, path);
        } else if (path == "experiment.y_grid") {
            cfg.y_grid = to_doubles(val, path);
        } else if (path == "experiment.intervals") {
            cfg.intervals.clear();
            for (const auto& tok : split(val, ',')) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos) {
                    throw std::invalid_argument("config: interval needs a:b, got " + tok);
                }
                cfg.intervals.push_back({to_double(tok.substr(0, colon), path),
                                         to_double(tok.substr(colon + 1), path)});
            }
        } else if (path == "assert.theta_lo") {
            cfg.asserts.theta_lo = to_double(val, path);
        } else if (path == "assert.theta_hi") {
            cfg.asserts.theta_hi = to_double(val, path);
        } else if (path == "assert.pot_ks_max") {
            cfg.asserts.pot_ks_max = to_double(val, path);
        } else if (path == "assert.aot_ks_max") {
            cfg.asserts.aot_ks_max = to_double(val, path);
        } else if (path == "assert.repp_chi2_p_min") {
            cfg.asserts.repp_chi2_p_min = to_double(val, path);
        } else if (path == "assert.interarrival_ks_max") {
            cfg.asserts.interarrival_ks_max = to_double(val, path);
        } else if (path == "assert.repp_k1_min") {
            cfg.asserts.repp_k1_min = to_double(val, path);
        } else if (path == "assert.laplace_cells_min") {
            cfg.asserts.laplace_cells_min = to_int(val, path);
        } else {
            throw std::invalid_argument("config: unknown key " + path);
        }
    }
    if (system_is_random) {
        RandomLYSystem rnd;
        rnd.alphabet = alphabet;
        rnd.weights = weights;
        cfg.system = rnd;
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "[system]\n";
    if (const auto* rnd = std::get_if<RandomLYSystem>(&cfg.system)) {
        os << "kind = random\n";
        os << "alphabet = ";
        for (std::size_t i = 0; i < rnd->alphabet.size(); ++i) {
            os << (i ? "," : "") << fmt(rnd->alphabet[i]);
        }
        os << "\nweights = ";
        for (std::size_t i = 0; i < rnd->weights.size(); ++i) {
            os << (i ? "," : "") << fmt(rnd->weights[i]);
        }
        os << "\n";
    } else {
        const auto& seq = std::get<SequentialSystem>(cfg.system);
        os << "kind = sequential\n";
        os << "beta = " << fmt(seq.beta) << "\n";
        os << "perturbed = " << (seq.perturbed ? "true" : "false") << "\n";
        if (seq.perturbed) {
            os << "xi = " << fmt(seq.xi) << "\n";
            os << "perturbation = "
               << (seq.sign == PerturbationSign::plus          ? "plus"
                   : seq.sign == PerturbationSign::minus       ? "minus"
                                                               : "alternating")
               << "\n";
        }
    }
    os << "\n[observable]\n";
    os << "type = "
       << (cfg.observable.type == GType::type1   ? 1
           : cfg.observable.type == GType::type2 ? 2
                                                 : 3)
       << "\n";
    os << "zeta = " << fmt(cfg.observable.zeta) << "\n";
    if (cfg.observable.type != GType::type1) {
        os << "alpha = " << fmt(cfg.observable.alpha) << "\n";
    }
    if (cfg.observable.type == GType::type3) {
        os << "D = " << fmt(cfg.observable.D) << "\n";
    }
    if (cfg.observable.type == GType::type1 && cfg.observable.h_scale != 1.0) {
        os << "h_scale = " << fmt(cfg.observable.h_scale) << "\n";
    }
    os << "\n[theory]\n";
    os << "zeta_kind = "
       << (cfg.zeta_kind == ZetaKind::interior_periodic ? "periodic"
           : cfg.zeta_kind == ZetaKind::boundary        ? "boundary"
                                                        : "aperiodic")
       << "\n";
    os << "period = " << cfg.period << "\n";
    os << "\n[experiment]\n";
    os << "tau = " << fmt(cfg.tau) << "\n";
    os << "n_grid = ";
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        os << (i ? "," : "") << cfg.n_grid[i];
    }
    os << "\n";
    os << "H = " << cfg.H << "\n";
    os << "ensemble = " << cfg.ensemble << "\n";
    if (cfg.q_estimate) {
        os << "q = estimate\n";
    } else {
        os << "q = " << cfg.q << "\n";
    }
    os << "mark = ";
    for (std::size_t i = 0; i < cfg.marks.size(); ++i) {
        os << (i ? "," : "") << mark_type_name(cfg.marks[i]);
    }
    os << "\n";
    if (cfg.gamma > 0.0) {
        os << "gamma = " << fmt(cfg.gamma) << "\n";
    } else {
        os << "gamma = auto\n";
    }
    os << "seed = " << cfg.seed << "\n";
    if (cfg.k_n_override > 0) os << "k_n = " << cfg.k_n_override << "\n";
    if (cfg.t_star_override > 0) os << "t_star = " << cfg.t_star_override << "\n";
    os << "grid_cells = " << cfg.grid_cells << "\n";
    os << "word_prefix = " << cfg.word_prefix << "\n";
    os << "mc_samples = " << cfg.mc_samples << "\n";
    os << "j_max = " << cfg.j_max << "\n";
    os << "dump_mrepp = " << cfg.dump_mrepp << "\n";
    os << "y_grid = ";
    for (std::size_t i = 0; i < cfg.y_grid.size(); ++i) {
        os << (i ? "," : "") << fmt(cfg.y_grid[i]);
    }
    os << "\n";
    os << "intervals = ";
    for (std::size_t i = 0; i < cfg.intervals.size(); ++i) {
        os << (i ? "," : "") << fmt(cfg.intervals[i].a) << ":"
           << fmt(cfg.intervals[i].b);
    }
    os << "\n";
    const auto& as = cfg.asserts;
    if (as.theta_lo || as.theta_hi || as.pot_ks_max || as.aot_ks_max ||
        as.repp_chi2_p_min || as.interarrival_ks_max || as.repp_k1_min ||
        as.laplace_cells_min) {
        os << "\n[assert]\n";
        if (as.theta_lo) os << "theta_lo = " << fmt(*as.theta_lo) << "\n";
        if (as.theta_hi) os << "theta_hi = " << fmt(*as.theta_hi) << "\n";
        if (as.pot_ks_max) os << "pot_ks_max = " << fmt(*as.pot_ks_max) << "\n";
        if (as.aot_ks_max) os << "aot_ks_max = " << fmt(*as.aot_ks_max) << "\n";
        if (as.repp_chi2_p_min) {
            os << "repp_chi2_p_min = " << fmt(*as.repp_chi2_p_min) << "\n";
        }
        if (as.interarrival_ks_max) {
            os << "interarrival_ks_max = " << fmt(*as.interarrival_ks_max) << "\n";
        }
        if (as.repp_k1_min) os << "repp_k1_min = " << fmt(*as.repp_k1_min) << "\n";
        if (as.laplace_cells_min) {
            os << "laplace_cells_min = " << *as.laplace_cells_min << "\n";
        }
    }
    return os.str();
}

}  // namespace repplab
