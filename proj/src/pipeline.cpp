#include "repplab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace repplab {

namespace {

using nlohmann::ordered_json;

struct OrbitOutput {
    OrbitSummary summary;
};

// evolve one orbit and collect its exceedances; counts gets one increment per
// exceedance index (integer accumulation, so thread merges are exact)
template <typename Step>
void run_orbit(CircleWalker& walker, std::int64_t horizon, double zeta,
               double radius, const Observable& obs, double u_n, std::int64_t q,
               Step&& step, OrbitSummary& out,
               std::vector<std::uint32_t>& counts) {
    std::vector<Exceedance> exceedances;
    for (std::int64_t i = 0; i < horizon; ++i) {
        const double d = circle_dist(walker.value(), zeta);
        if (d < radius) {
            const double value = obs.g_of(d);
            if (value > u_n) {
                exceedances.push_back({i, value - u_n});
                ++counts[static_cast<std::size_t>(i)];
            }
        }
        walker.step(step(i));
    }
    out.exceedances = static_cast<std::int64_t>(exceedances.size());
    out.clusters = detect_clusters(exceedances, q, horizon);
    for (const auto& c : out.clusters) {
        for (double e : c.excesses) {
            if (std::isinf(e)) {
                ++out.infinite_marks;
                break;
            }
        }
    }
}

}  // namespace

EnsembleRun generate_ensemble(const SystemSpec& sys, const Observable& obs,
                              double u_n, double radius, std::int64_t n, int H,
                              std::int64_t q, double tau, std::int64_t ensemble,
                              double gamma, std::uint64_t master_seed,
                              int threads, std::size_t word_prefix) {
    const std::int64_t horizon = static_cast<std::int64_t>(H) * n;
    EnsembleRun run;
    run.system = system_id(sys);
    run.n = n;
    run.H = H;
    run.tau = tau;
    run.u_n = u_n;
    run.radius = radius;
    run.q = q;
    run.a_n = normalizer(obs, u_n);
    run.gamma = gamma;
    run.burn_in = burn_in_length(n, gamma);
    run.seeds.master = master_seed;
    run.orbits.resize(static_cast<std::size_t>(ensemble));

    const auto* rnd = std::get_if<RandomLYSystem>(&sys);
    std::vector<double> schedule;
    std::vector<std::uint32_t> word;
    std::size_t prefix = 0;
    if (rnd) {
        prefix = word_prefix;
        const std::uint64_t word_seed = derive_seed(master_seed, "word", 0);
        Rng wrng(word_seed);
        word = sample_word(*rnd, prefix + static_cast<std::size_t>(horizon), wrng);
        run.seeds.record("word", word_seed);
        std::ostringstream ref;
        ref << "mu_omega (quenched word, prefix " << prefix << ")";
        run.reference_measure = ref.str();
    } else {
        schedule = std::get<SequentialSystem>(sys).schedule(
            static_cast<std::size_t>(horizon));
        run.reference_measure = "m (Lebesgue)";
    }
    run.seeds.record("orbit_stream", derive_seed(master_seed, "orbit", 0));

    const double zeta = obs.zeta;
    const bool lattice = all_integer_betas(sys);
    const int nthreads = std::max(1, threads);
    std::vector<std::vector<std::uint32_t>> counts(
        static_cast<std::size_t>(nthreads),
        std::vector<std::uint32_t>(static_cast<std::size_t>(horizon), 0));

    std::atomic<std::int64_t> next_chunk{0};
    const std::int64_t chunk = 512;
    const std::int64_t nchunks = (ensemble + chunk - 1) / chunk;

    const auto worker = [&](int tid) {
        auto& local_counts = counts[static_cast<std::size_t>(tid)];
        while (true) {
            const std::int64_t c = next_chunk.fetch_add(1);
            if (c >= nchunks) break;
            const std::int64_t lo = c * chunk;
            const std::int64_t hi = std::min(ensemble, lo + chunk);
            for (std::int64_t o = lo; o < hi; ++o) {
                CircleWalker walker(derive_seed(master_seed, "orbit",
                                                static_cast<std::uint64_t>(o)),
                                    lattice);
                auto& out = run.orbits[static_cast<std::size_t>(o)];
                if (rnd) {
                    for (std::size_t i = 0; i < prefix; ++i) {
                        walker.step(rnd->alphabet[word[i]]);
                    }
                    run_orbit(
                        walker, horizon, zeta, radius, obs, u_n, q,
                        [&](std::int64_t i) {
                            return rnd->alphabet
                                [word[prefix + static_cast<std::size_t>(i)]];
                        },
                        out, local_counts);
                } else {
                    run_orbit(
                        walker, horizon, zeta, radius, obs, u_n, q,
                        [&](std::int64_t i) {
                            return schedule[static_cast<std::size_t>(i)];
                        },
                        out, local_counts);
                }
            }
        }
    };

    if (nthreads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
        for (auto& t : pool) t.join();
    }

    run.Fbar.assign(static_cast<std::size_t>(horizon), 0.0);
    const double inv = 1.0 / static_cast<double>(ensemble);
    for (std::int64_t i = 0; i < horizon; ++i) {
        std::uint64_t total = 0;
        for (int t = 0; t < nthreads; ++t) {
            total += counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
        }
        run.Fbar[static_cast<std::size_t>(i)] = static_cast<double>(total) * inv;
    }
    run.freq = frequency_summary(run.Fbar, n, H);
    return run;
}

ThetaResult theta_theory_of(const ExperimentConfig& cfg) {
    double beta = 0.0;
    if (const auto* seq = std::get_if<SequentialSystem>(&cfg.system)) {
        beta = seq->beta;
    } else {
        // random systems in scope have theta = 1
        return extremal_index(2.0, ZetaKind::aperiodic);
    }
    if (cfg.zeta_kind == ZetaKind::boundary) {
        // densities at both sides of 0 ~ 1 from the invariant density
        const DensityApprox h = parry_density(beta, 64, cfg.grid_cells);
        const double h0 = h.values.front();
        const double h1 = h.values.back();
        return extremal_index(beta, ZetaKind::boundary, cfg.period, h0, h1);
    }
    return extremal_index(beta, cfg.zeta_kind, cfg.period);
}

CompoundPoissonModel theory_model(const ExperimentConfig& cfg, MarkType mark) {
    CompoundPoissonModel model;
    model.theta = theta_theory_of(cfg).theta;
    model.mark_type = mark;
    const bool clustering =
        cfg.zeta_kind == ZetaKind::interior_periodic && cfg.q > 0;
    switch (mark) {
        case MarkType::repp:
            model.pi = MultiplicityDist::geometric(model.theta);
            break;
        case MarkType::pot:
            model.pi = MultiplicityDist::pot(cfg.observable);
            break;
        case MarkType::aot:
        default:
            if (clustering) {
                double beta = std::get<SequentialSystem>(cfg.system).beta;
                const double M = std::pow(beta, cfg.period);
                model.pi = MultiplicityDist::aot(aot_form_of(cfg.observable),
                                                 cfg.observable.alpha, M);
            } else {
                // q = 0: AOT and POT coincide (EOT)
                model.pi = MultiplicityDist::pot(cfg.observable);
            }
            break;
    }
    return model;
}

NResult analyze_n(const ExperimentConfig& cfg, std::int64_t n,
                  std::uint64_t master_seed, int threads,
                  EnsembleRun* run_out) {
    NResult res;
    res.n = n;

    // threshold
    if (const auto* rnd = std::get_if<RandomLYSystem>(&cfg.system)) {
        const auto mt = marginal_threshold(
            cfg.tau, n, *rnd, cfg.observable, cfg.mc_samples, cfg.word_prefix,
            cfg.grid_cells, derive_seed(master_seed, "marginal", 0));
        res.threshold.u = mt.u;
        res.threshold.radius = mt.radius;
        res.threshold.residual = mt.residual;
        res.threshold.source = "marginal_MC";
    } else {
        const auto& seq = std::get<SequentialSystem>(cfg.system);
        const DensityApprox density = parry_density(seq.beta, 64, cfg.grid_cells);
        res.threshold = threshold_from_tau(cfg.tau, n, density, cfg.observable);
    }

    EnsembleRun local_run;
    EnsembleRun& run = run_out ? *run_out : local_run;
    run = generate_ensemble(cfg.system, cfg.observable, res.threshold.u,
                            res.threshold.radius, n, cfg.H, cfg.q, cfg.tau,
                            cfg.ensemble, cfg.effective_gamma(), master_seed,
                            threads, cfg.word_prefix);
    res.freq = run.freq;
    res.burn_in = run.burn_in;

    res.blocks = build_blocks(run.Fbar, cfg.k_n_for(n), cfg.t_star_for(n),
                              cfg.H, n, run.burn_in);
    res.kn_condition = static_cast<double>(cfg.k_n_for(n)) *
                       static_cast<double>(cfg.t_star_for(n)) * run.freq.Fbar_max;

    res.theta_hat = estimate_theta(run);
    res.theta_theory = theta_theory_of(cfg);

    // mark ECDFs and GOF tests
    for (MarkType mark : cfg.marks) {
        MarkAnalysis ma;
        ma.mark = mark;
        ma.ecdf = empirical_multiplicity(run, mark);
        res.infinite_marks += ma.ecdf.infinite_count;
        if (mark == MarkType::repp) {
            std::int64_t total = 0;
            for (std::int64_t c : ma.ecdf.size_histogram) total += c;
            res.clusters = total;
            if (total > 0) {
                res.repp_mass_at_1 =
                    static_cast<double>(ma.ecdf.size_histogram.empty()
                                            ? 0
                                            : ma.ecdf.size_histogram[0]) /
                    static_cast<double>(total);
            }
            if (cfg.zeta_kind != ZetaKind::boundary && total >= 30) {
                res.repp_chi2 = chi_square_geometric(ma.ecdf.size_histogram,
                                                     res.theta_theory.theta);
                res.repp_chi2.n = n;
                res.repp_chi2_available = true;
            }
        }
        if (cfg.zeta_kind != ZetaKind::boundary &&
            ma.ecdf.sorted_marks.size() >= 100 && mark != MarkType::repp) {
            const auto model = theory_model(cfg, mark);
            ma.ks = ks_statistic(
                ma.ecdf.sorted_marks,
                [&](double x) { return model.pi.cdf(x); },
                "marks ~ " + model.pi.describe());
            ma.ks.n = n;
            ma.ks_available = true;

            // plot grid: up to 256 quantile points
            const std::size_t N = ma.ecdf.sorted_marks.size();
            const std::size_t step = std::max<std::size_t>(1, N / 256);
            for (std::size_t i = 0; i < N; i += step) {
                const double x = ma.ecdf.sorted_marks[i];
                ma.plot_x.push_back(x);
                ma.plot_ecdf.push_back(static_cast<double>(i + 1) /
                                       static_cast<double>(N));
                ma.plot_pi.push_back(model.pi.cdf(x));
            }
        }
        res.marks.push_back(std::move(ma));
    }

    res.interarrival = interarrival_test(run, res.theta_theory.theta);
    res.dprime = dprime_diagnostic(run, res.blocks);
    res.ulc = ulc_diagnostic(run, res.blocks, cfg.y_grid);

    res.laplace_mark = cfg.marks.front();
    for (MarkType mark : cfg.marks) {
        if (mark == MarkType::pot) res.laplace_mark = MarkType::pot;
    }
    res.laplace = laplace_convergence(run, theory_model(cfg, res.laplace_mark),
                                      cfg.intervals, cfg.y_grid);
    return res;
}

namespace {

ordered_json report_json(const TestReport& r) {
    ordered_json j;
    j["name"] = r.name;
    j["null"] = r.null_reference;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["sample_size"] = r.sample_size;
    j["verdict"] = r.verdict;
    j["n"] = r.n;
    j["ensemble"] = r.ensemble;
    j["seed"] = r.seed;
    return j;
}

ordered_json nresult_json(const NResult& r, const ExperimentConfig& cfg) {
    ordered_json j;
    j["n"] = r.n;
    j["u_n"] = r.threshold.u;
    j["radius"] = r.threshold.radius;
    j["threshold_source"] = r.threshold.source;
    j["threshold_residual"] = r.threshold.residual;
    j["F_star_1n"] = r.freq.F_star_1n;
    j["F_star_Hn"] = r.freq.F_star_Hn;
    j["Fbar_max"] = r.freq.Fbar_max;
    j["v_n"] = r.freq.v_defined ? r.freq.v_n : 0.0;
    j["v_defined"] = r.freq.v_defined;
    j["burn_in"] = r.burn_in;
    j["kn_condition"] = r.kn_condition;
    j["clusters"] = r.clusters;
    j["infinite_marks"] = r.infinite_marks;
    j["theta_hat"] = r.theta_hat.defined ? r.theta_hat.value : -1.0;
    j["theta_se"] = r.theta_hat.se;
    j["theta_escapes"] = r.theta_hat.escapes;
    j["theta_exceedances"] = r.theta_hat.exceedances;
    j["theta_theory"] = r.theta_theory.theta;
    j["theta_verbatim"] = r.theta_theory.verbatim;
    j["theta_normalized"] = r.theta_theory.normalized;
    j["repp_mass_at_1"] = r.repp_mass_at_1;

    ordered_json blocks;
    blocks["k_n"] = r.blocks.k_n;
    blocks["t_n_star"] = r.blocks.t_n_star;
    blocks["epsilon"] = r.blocks.epsilon;
    blocks["estimate_ok"] = r.blocks.estimate_ok;
    blocks["tail_ok"] = r.blocks.tail_ok;
    blocks["t_invariant_ok"] = r.blocks.t_invariant_ok;
    j["blocks"] = blocks;

    ordered_json marks = ordered_json::array();
    for (const auto& ma : r.marks) {
        ordered_json m;
        m["mark"] = mark_type_name(ma.mark);
        m["clusters"] = static_cast<std::int64_t>(ma.ecdf.sorted_marks.size());
        m["infinite"] = ma.ecdf.infinite_count;
        if (ma.mark == MarkType::repp) {
            m["size_histogram"] = ma.ecdf.size_histogram;
        }
        if (ma.ks_available) m["ks"] = report_json(ma.ks);
        if (!ma.plot_x.empty()) {
            m["ecdf"] = {{"x", ma.plot_x},
                         {"ecdf", ma.plot_ecdf},
                         {"pi_theory", ma.plot_pi}};
        }
        marks.push_back(m);
    }
    j["marks"] = marks;
    if (r.repp_chi2_available) j["repp_chi2"] = report_json(r.repp_chi2);
    j["interarrival"] = report_json(r.interarrival);

    j["dprime"] = {{"value", r.dprime.value}, {"mc_sigma", r.dprime.mc_sigma}};
    {
        ordered_json u;
        u["y"] = r.ulc.y;
        u["block_sum"] = r.ulc.block_sum;
        u["trimmed_sum"] = r.ulc.trimmed_sum;
        u["tail"] = r.ulc.tail;
        j["ulc"] = u;
    }
    {
        ordered_json cells = ordered_json::array();
        for (const auto& c : r.laplace.cells) {
            cells.push_back({{"y", c.y},
                             {"a", c.interval.a},
                             {"b", c.interval.b},
                             {"psi_hat", c.psi_hat},
                             {"psi_theory", c.psi_theory},
                             {"mc_sigma", c.mc_sigma}});
        }
        j["laplace"] = {{"mark", mark_type_name(r.laplace_mark)},
                        {"within_3sigma", r.laplace.within_3sigma},
                        {"cells", cells}};
    }
    (void)cfg;
    return j;
}

}  // namespace

BundleResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    BundleResult bundle;
    const std::uint64_t master =
        opts.seed_override ? *opts.seed_override : cfg.seed;

    ordered_json root;
    root["format"] = "repplab bundle v1";
    root["config"] = serialize_config(cfg);
    root["system"] = system_id(cfg.system);
    {
        const auto theta = theta_theory_of(cfg);
        ordered_json model;
        model["theta"] = theta.theta;
        model["theta_verbatim"] = theta.verbatim;
        model["theta_normalized"] = theta.normalized;
        model["pi"] = ordered_json::object();
        for (MarkType mark : cfg.marks) {
            model["pi"][mark_type_name(mark)] =
                theory_model(cfg, mark).pi.describe();
        }
        root["model"] = model;
    }
    ordered_json ledger;
    ledger["master_seed"] = master;
    ledger["derivation"] = SeedLedger{}.derivation;
    ordered_json entries = ordered_json::array();

    ordered_json results = ordered_json::array();
    for (std::int64_t n : cfg.n_grid) {
        EnsembleRun run;
        NResult r = analyze_n(cfg, n, master, opts.threads, &run);
        for (const auto& [tag, value] : run.seeds.entries) {
            entries.push_back({{"n", n}, {"tag", tag}, {"seed", value}});
        }
        results.push_back(nresult_json(r, cfg));

        if (!opts.out_dir.empty() && cfg.dump_mrepp > 0) {
            const double v_n = run.freq.v_defined
                                   ? run.freq.v_n
                                   : static_cast<double>(n) / cfg.tau;
            for (std::int64_t o = 0;
                 o < std::min<std::int64_t>(cfg.dump_mrepp,
                                            static_cast<std::int64_t>(
                                                run.orbits.size()));
                 ++o) {
                const auto measure = build_mrepp(
                    run.orbits[static_cast<std::size_t>(o)].clusters,
                    r.threshold.u, cfg.q, cfg.marks.front(), v_n);
                std::ostringstream name;
                name << opts.out_dir << "/mrepp_n" << n << "_orbit" << o << ".txt";
                std::ofstream out(name.str());
                write_mrepp(out, measure);
            }
        }

        // assertion gates
        const auto& as = cfg.asserts;
        const auto fail = [&](const std::string& msg) {
            bundle.asserts_passed = false;
            bundle.assert_failures.push_back("n=" + std::to_string(n) + ": " + msg);
        };
        if (as.theta_lo && !(r.theta_hat.defined && r.theta_hat.value >= *as.theta_lo)) {
            fail("theta below " + std::to_string(*as.theta_lo));
        }
        if (as.theta_hi && !(r.theta_hat.defined && r.theta_hat.value <= *as.theta_hi)) {
            fail("theta above " + std::to_string(*as.theta_hi));
        }
        for (const auto& ma : r.marks) {
            if (ma.mark == MarkType::pot && as.pot_ks_max && ma.ks_available &&
                ma.ks.statistic > *as.pot_ks_max) {
                fail("POT ks above bound");
            }
            if (ma.mark == MarkType::aot && as.aot_ks_max && ma.ks_available &&
                ma.ks.statistic > *as.aot_ks_max) {
                fail("AOT ks above bound");
            }
        }
        if (as.repp_chi2_p_min && r.repp_chi2_available &&
            r.repp_chi2.p_value < *as.repp_chi2_p_min) {
            fail("REPP chi2 p below bound");
        }
        if (as.interarrival_ks_max && r.interarrival.statistic > *as.interarrival_ks_max) {
            fail("interarrival ks above bound");
        }
        if (as.repp_k1_min && r.repp_mass_at_1 < *as.repp_k1_min) {
            fail("REPP mass at k=1 below bound");
        }
        if (as.laplace_cells_min && r.laplace.within_3sigma < *as.laplace_cells_min) {
            fail("laplace cells within 3 sigma below bound");
        }
        bundle.per_n.push_back(std::move(r));
    }
    ledger["entries"] = entries;
    root["seed_ledger"] = ledger;
    root["results"] = results;
    root["asserts_passed"] = bundle.asserts_passed;
    root["assert_failures"] = bundle.assert_failures;

    bundle.bundle_json = root.dump(2);
    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        {
            std::ofstream out(opts.out_dir + "/bundle.json");
            out << bundle.bundle_json << "\n";
        }
        {
            std::ofstream out(opts.out_dir + "/config.ini");
            out << serialize_config(cfg);
        }
    }
    return bundle;
}

PlotKind plot_kind_from_name(const std::string& name) {
    if (name == "ecdf_vs_pi") return PlotKind::ecdf_vs_pi;
    if (name == "theta_vs_n") return PlotKind::theta_vs_n;
    if (name == "dprime_vs_n") return PlotKind::dprime_vs_n;
    if (name == "laplace_grid") return PlotKind::laplace_grid;
    throw std::invalid_argument("unknown plot kind: " + name);
}

std::vector<std::string> emit_plot_data(const std::string& bundle_json_path,
                                        PlotKind kind,
                                        const std::string& out_dir) {
    std::ifstream in(bundle_json_path);
    if (!in) {
        throw std::invalid_argument("emit_plot_data: cannot open " +
                                    bundle_json_path);
    }
    ordered_json root;
    in >> root;
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    char buf[256];

    const auto open_csv = [&](const std::string& name, const std::string& header)
        -> std::ofstream {
        const std::string path = out_dir + "/" + name;
        std::ofstream out(path);
        out << header << "\n";
        written.push_back(path);
        return out;
    };

    switch (kind) {
        case PlotKind::ecdf_vs_pi: {
            for (const auto& r : root["results"]) {
                for (const auto& m : r["marks"]) {
                    if (!m.contains("ecdf")) continue;
                    std::ostringstream name;
                    name << "ecdf_vs_pi_" << m["mark"].get<std::string>() << "_n"
                         << r["n"].get<std::int64_t>() << ".csv";
                    auto out = open_csv(name.str(), "x,ecdf,pi_theory");
                    const auto& e = m["ecdf"];
                    for (std::size_t i = 0; i < e["x"].size(); ++i) {
                        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n",
                                      e["x"][i].get<double>(),
                                      e["ecdf"][i].get<double>(),
                                      e["pi_theory"][i].get<double>());
                        out << buf;
                    }
                }
            }
            break;
        }
        case PlotKind::theta_vs_n: {
            auto out = open_csv("theta_vs_n.csv",
                                "n,theta_hat,theta_se,theta_theory");
            for (const auto& r : root["results"]) {
                std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n",
                              static_cast<long long>(r["n"].get<std::int64_t>()),
                              r["theta_hat"].get<double>(),
                              r["theta_se"].get<double>(),
                              r["theta_theory"].get<double>());
                out << buf;
            }
            break;
        }
        case PlotKind::dprime_vs_n: {
            auto out = open_csv("dprime_vs_n.csv", "n,dprime,mc_sigma");
            for (const auto& r : root["results"]) {
                std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n",
                              static_cast<long long>(r["n"].get<std::int64_t>()),
                              r["dprime"]["value"].get<double>(),
                              r["dprime"]["mc_sigma"].get<double>());
                out << buf;
            }
            break;
        }
        case PlotKind::laplace_grid: {
            auto out = open_csv("laplace_grid.csv",
                                "n,y,a,b,psi_hat,psi_theory,mc_sigma");
            for (const auto& r : root["results"]) {
                for (const auto& c : r["laplace"]["cells"]) {
                    std::snprintf(
                        buf, sizeof buf,
                        "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                        static_cast<long long>(r["n"].get<std::int64_t>()),
                        c["y"].get<double>(), c["a"].get<double>(),
                        c["b"].get<double>(), c["psi_hat"].get<double>(),
                        c["psi_theory"].get<double>(),
                        c["mc_sigma"].get<double>());
                    out << buf;
                }
            }
            break;
        }
    }
    return written;
}

QProfile estimate_q_driver(const ExperimentConfig& cfg,
                           const std::vector<std::int64_t>& n_grid,
                           std::int64_t ensemble, std::uint64_t seed) {
    std::vector<std::vector<std::int64_t>> gap_samples;
    gap_samples.reserve(n_grid.size());
    for (std::int64_t n : n_grid) {
        // threshold for this n
        double radius = 0.0;
        if (const auto* rnd = std::get_if<RandomLYSystem>(&cfg.system)) {
            const auto mt = marginal_threshold(
                cfg.tau, n, *rnd, cfg.observable,
                std::min<std::size_t>(cfg.mc_samples, 2000), cfg.word_prefix,
                std::min<std::size_t>(cfg.grid_cells, 1024),
                derive_seed(seed, "q_marginal", static_cast<std::uint64_t>(n)));
            radius = mt.radius;
        } else {
            const auto& seq = std::get<SequentialSystem>(cfg.system);
            const DensityApprox density =
                parry_density(seq.beta, 64, cfg.grid_cells);
            radius = threshold_from_tau(cfg.tau, n, density, cfg.observable).radius;
        }

        const auto* rnd = std::get_if<RandomLYSystem>(&cfg.system);
        std::vector<double> schedule;
        std::vector<std::uint32_t> word;
        if (rnd) {
            Rng wrng(derive_seed(seed, "q_word", static_cast<std::uint64_t>(n)));
            word = sample_word(*rnd, cfg.word_prefix + static_cast<std::size_t>(n),
                               wrng);
        } else {
            schedule = std::get<SequentialSystem>(cfg.system).schedule(
                static_cast<std::size_t>(n));
        }

        const bool lattice = all_integer_betas(cfg.system);
        std::vector<std::int64_t> gaps;
        for (std::int64_t o = 0; o < ensemble; ++o) {
            CircleWalker walker(
                derive_seed(seed, "q_orbit",
                            static_cast<std::uint64_t>(n) * 1000003ULL +
                                static_cast<std::uint64_t>(o)),
                lattice);
            if (rnd) {
                for (std::size_t i = 0; i < cfg.word_prefix; ++i) {
                    walker.step(rnd->alphabet[word[i]]);
                }
            }
            std::int64_t last = -1;
            for (std::int64_t i = 0; i < n; ++i) {
                if (circle_dist(walker.value(), cfg.observable.zeta) < radius) {
                    if (last >= 0) gaps.push_back(i - last);
                    last = i;
                }
                walker.step(rnd ? rnd->alphabet[word[cfg.word_prefix +
                                                     static_cast<std::size_t>(i)]]
                                : schedule[static_cast<std::size_t>(i)]);
            }
        }
        gap_samples.push_back(std::move(gaps));
    }
    return estimate_q_profile(n_grid, gap_samples, cfg.j_max);
}

}  // namespace repplab
