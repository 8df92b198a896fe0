#include "covspec/cli.hpp"

#include <cmath>
#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "covspec/errors.hpp"
#include "covspec/json_io.hpp"

namespace covspec::cli {

namespace {

using io::json;

struct Options {
    std::string model_path;
    std::string out = "out";
    std::uint64_t seed = kDefaultSeed;
    std::size_t n = 1000;
    std::size_t trials = 100;
    std::size_t grid = 2001;
    std::size_t bins = 50;
    bool bias = false;
    bool det_s = false;
    int gap_index = -1;
    std::string experiment = "census";
    std::vector<double> targets;
};

void write_json(const std::string& path, const json& j) {
    io::write_file(path, j.dump(2) + "\n");
}

int cmd_density(const Options& opt) {
    const auto spec = io::load_model(opt.model_path);
    auto grid = stieltjes::default_density_grid(spec, opt.grid);
    const auto curve = stieltjes::density(spec, std::move(grid));
    io::write_file(opt.out + ".csv", io::density_csv(curve));
    write_json(opt.out + ".json", io::density_meta_to_json(curve));
    return kExitOk;
}

int cmd_support(const Options& opt) {
    const auto spec = io::load_model(opt.model_path);
    const auto rep = support::compute_support(spec);
    write_json(opt.out + ".json", io::support_to_json(rep));

    // x(m) curve over a symmetric m-range covering all poles.
    double lo = -5.0, hi = 5.0;
    for (const auto& a : spec.nu.atoms())
        if (a.t > 0.0) lo = std::min(lo, -1.5 / (spec.c * a.t));
    std::vector<double> m_grid(opt.grid);
    for (std::size_t i = 0; i < opt.grid; ++i)
        m_grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(opt.grid - 1);
    const auto curve = support::emit_xm_curve(spec, m_grid);
    io::write_file(opt.out + "_xm.csv", io::xm_curve_csv(curve));
    return kExitOk;
}

int cmd_outliers(const Options& opt) {
    const auto spec = io::load_model(opt.model_path);
    const auto rep = support::compute_support(spec);
    const auto preds = outliers::find_outliers(spec, rep);
    write_json(opt.out + ".json", io::outliers_to_json(preds));

    // g(x) and det(H+I) curves per outlier-eligible gap.
    std::string csv = "gap_index,x,g,det_h_plus_i\n";
    const auto gaps = rep.outlier_gaps();
    const std::size_t r = spec.total_rank();
    for (std::size_t gi = 0; gi < gaps.size(); ++gi) {
        const auto& gap = gaps[gi];
        const double inset = std::isinf(gap.hi) ? 1e-3 * std::max(1.0, gap.lo)
                                                : 1e-3 * (gap.hi - gap.lo);
        const double lo = gap.lo + inset;
        const double hi = std::isinf(gap.hi) ? 10.0 * std::max(1.0, gap.lo) : gap.hi - inset;
        const std::size_t pts = 200;
        for (std::size_t i = 0; i < pts; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / (pts - 1);
            const double g = outliers::g_func(spec, x);
            double det = 1.0;
            if (r > 0) {
                auto h = outliers::compute_H(spec, x);
                for (std::size_t k = 0; k < r; ++k) h(k, k) += 1.0;
                det = linalg::determinant(h).real();
            }
            csv += std::to_string(gi) + ',' + io::format_double(x) + ',' + io::format_double(g) +
                   ',' + io::format_double(det) + '\n';
        }
    }
    io::write_file(opt.out + "_curves.csv", csv);
    return kExitOk;
}

int cmd_fluct(const Options& opt) {
    const auto spec = io::load_model(opt.model_path);
    const auto rep = support::compute_support(spec);
    auto preds = outliers::find_outliers(spec, rep);
    if (opt.gap_index >= 0) {
        const auto gaps = rep.outlier_gaps();
        if (static_cast<std::size_t>(opt.gap_index) >= gaps.size())
            throw DomainError("fluct: --gap-index out of range");
        const auto gap = gaps[static_cast<std::size_t>(opt.gap_index)];
        std::erase_if(preds, [&](const auto& p) { return p.gap.lo != gap.lo; });
    }
    if (preds.empty()) throw DomainError("fluct: no predicted outliers for this model");

    json arr = json::array();
    std::vector<fluct::FluctuationReport> reports;
    for (const auto& p : preds) {
        auto fr = fluct::make_report(spec, p);
        if (opt.bias) {
            const auto d = measure::quantile_discretize(spec.nu, opt.n);
            std::vector<std::pair<double, std::size_t>> blocks;
            for (const auto& s : spec.spikes) blocks.emplace_back(s.omega_sq, s.multiplicity);
            const auto lambda_n =
                measure::MatrixMeasure::product(measure::DiscreteMeasure::from_points(d), blocks);
            std::size_t offset = 0;
            for (const auto& s : spec.spikes) {
                if (s.omega_sq == fr.omega_sq) break;
                offset += s.multiplicity;
            }
            const double c_n = static_cast<double>(std::llround(spec.c * opt.n)) /
                               static_cast<double>(opt.n);
            fr.bias = fluct::compute_bias(c_n, d, lambda_n, fr.rho, offset, fr.multiplicity);
        }
        arr.push_back(io::fluctuation_to_json(fr));
        reports.push_back(std::move(fr));
    }
    json out;
    out["reports"] = std::move(arr);
    write_json(opt.out + ".json", out);

    // limit-law samples for the leading prediction
    Rng rng(opt.seed);
    std::string csv;
    for (std::size_t k = 0; k < reports.front().multiplicity; ++k)
        csv += (k ? "," : "") + ("xi" + std::to_string(k + 1));
    csv += '\n';
    for (std::size_t t = 0; t < opt.trials; ++t) {
        const auto draw = fluct::sample_limit_law(reports.front(), rng);
        for (std::size_t k = 0; k < draw.size(); ++k)
            csv += (k ? "," : "") + io::format_double(draw[k]);
        csv += '\n';
    }
    io::write_file(opt.out + "_samples.csv", csv);
    return kExitOk;
}

int cmd_design(const Options& opt) {
    auto spec = io::load_model(opt.model_path);
    if (opt.targets.empty()) throw DomainError("design: provide --targets");
    const auto spikes = outliers::design_spikes(spec, opt.targets);
    spec.spikes = spikes;
    spec.validate();
    write_json(opt.out + ".json", io::model_to_json(spec));
    return kExitOk;
}

int cmd_simulate(const Options& opt) {
    const auto spec = io::load_model(opt.model_path);
    const auto cfg = sim::make_config(spec, opt.n, opt.seed, opt.trials, opt.det_s);
    const auto rep = support::compute_support(spec);

    if (opt.experiment == "density") {
        const auto exp = sim::experiment_density(cfg, opt.bins);
        json j = io::density_experiment_to_json(exp);
        j["experiment"] = "density";
        j["n"] = static_cast<std::int64_t>(cfg.n);
        j["N"] = static_cast<std::int64_t>(cfg.N);
        j["trials"] = static_cast<std::int64_t>(cfg.trials);
        write_json(opt.out + ".json", j);
        std::string csv = "bin_lo,bin_hi,histogram\n";
        for (std::size_t b = 0; b < exp.histogram.size(); ++b)
            csv += io::format_double(exp.bin_edges[b]) + "," +
                   io::format_double(exp.bin_edges[b + 1]) + "," +
                   io::format_double(exp.histogram[b]) + "\n";
        io::write_file(opt.out + ".csv", csv);
        return kExitOk;
    }

    if (opt.experiment == "census") {
        const auto preds = outliers::find_outliers(spec, rep);
        std::vector<std::size_t> predicted(rep.gaps.size(), 0);
        for (const auto& p : preds)
            for (std::size_t gi = 0; gi < rep.gaps.size(); ++gi)
                if (p.rho > rep.gaps[gi].lo && p.rho < rep.gaps[gi].hi)
                    predicted[gi] += p.multiplicity;
        std::vector<std::vector<std::size_t>> counts(cfg.trials);
        sim::parallel_trials(cfg.trials, [&](std::size_t t) {
            counts[t] = sim::run_trial(cfg, rep, t).outliers_per_gap;
        });
        std::size_t matches = 0;
        json per_trial = json::array();
        for (const auto& c : counts) {
            per_trial.push_back(c);
            if (std::equal(c.begin(), c.end(), predicted.begin())) ++matches;
        }
        json j;
        j["experiment"] = "census";
        j["n"] = static_cast<std::int64_t>(cfg.n);
        j["N"] = static_cast<std::int64_t>(cfg.N);
        j["trials"] = static_cast<std::int64_t>(cfg.trials);
        j["predicted_per_gap"] = predicted;
        j["observed_per_gap"] = std::move(per_trial);
        j["matching_trials"] = static_cast<std::int64_t>(matches);
        write_json(opt.out + ".json", j);
        return kExitOk;
    }

    if (opt.experiment == "fluct") {
        const auto preds = outliers::find_outliers(spec, rep);
        if (preds.empty()) throw DomainError("simulate fluct: no predicted outliers");
        const auto& lead = preds.front();
        const auto frep = fluct::make_report(spec, lead);
        const auto exp = sim::experiment_fluctuations(cfg, lead, frep);
        json j = io::fluct_experiment_to_json(exp);
        j["experiment"] = "fluct";
        j["rho"] = lead.rho;
        j["n"] = static_cast<std::int64_t>(cfg.n);
        j["trials"] = static_cast<std::int64_t>(cfg.trials);
        j["predicted_std_scalar"] =
            std::abs(frep.scale) * std::sqrt(frep.alpha_sq);
        write_json(opt.out + ".json", j);
        std::string csv;
        for (std::size_t k = 0; k < exp.coords; ++k)
            csv += (k ? "," : "") + ("m" + std::to_string(k + 1));
        csv += '\n';
        for (const auto& dr : exp.draws) {
            for (std::size_t k = 0; k < dr.size(); ++k)
                csv += (k ? "," : "") + io::format_double(dr[k]);
            csv += '\n';
        }
        io::write_file(opt.out + ".csv", csv);
        return kExitOk;
    }

    if (opt.experiment == "shat") {
        const auto gaps = rep.outlier_gaps();
        json trials_json = json::array();
        std::vector<json> rows(cfg.trials);
        sim::parallel_trials(cfg.trials, [&](std::size_t t) {
            const auto real = sim::build_realization(cfg, t);
            const auto ctx = sim::make_shat_context(real);
            const auto trial = sim::run_trial(cfg, rep, t);
            json row;
            row["trial"] = static_cast<std::int64_t>(t);
            json per_gap = json::array();
            for (std::size_t gi = 0; gi < rep.gaps.size(); ++gi) {
                const auto& gap = rep.gaps[gi];
                if (gap.lo < rep.first_bulk_left_edge) continue;
                const double inset = std::isinf(gap.hi) ? 1e-3 * std::max(1.0, gap.lo)
                                                        : 1e-3 * (gap.hi - gap.lo);
                const double lo = gap.lo + inset;
                const double hi =
                    std::isinf(gap.hi) ? 3.0 * std::max(1.0, gap.lo) : gap.hi - inset;
                std::size_t changes = 0;
                double prev = 0.0;
                bool have_prev = false;
                for (std::size_t i = 0; i < 200; ++i) {
                    const double x = lo + (hi - lo) * static_cast<double>(i) / 199.0;
                    double v;
                    try {
                        v = sim::shat_det(ctx, x);
                    } catch (const SingularityError&) {
                        continue;
                    }
                    if (have_prev && (v < 0.0) != (prev < 0.0)) ++changes;
                    prev = v;
                    have_prev = true;
                }
                json g;
                g["gap"] = json::array({gap.lo, std::isinf(gap.hi) ? json(nullptr) : json(gap.hi)});
                g["sign_changes"] = static_cast<std::int64_t>(changes);
                g["eigenvalue_count"] = static_cast<std::int64_t>(trial.outliers_per_gap[gi]);
                per_gap.push_back(std::move(g));
            }
            row["gaps"] = std::move(per_gap);
            rows[t] = std::move(row);
        });
        for (auto& r : rows) trials_json.push_back(std::move(r));
        json j;
        j["experiment"] = "shat";
        j["n"] = static_cast<std::int64_t>(cfg.n);
        j["trials"] = static_cast<std::int64_t>(cfg.trials);
        j["per_trial"] = std::move(trials_json);
        write_json(opt.out + ".json", j);
        (void)gaps;
        return kExitOk;
    }

    throw DomainError("simulate: unknown experiment '" + opt.experiment + "'");
}

}  // namespace

int run(const std::vector<std::string>& argv) {
    CLI::App app{
        "covspec: limiting spectra, outliers and fluctuations of deformed "
        "sample-covariance models"};
    app.footer(
        "Outputs are written as <out>.json / <out>.csv (plus suffixed extras per command).\n"
        "Exit codes: 0 ok, 2 I/O or JSON parse error, 3 invalid model, 4 domain error,\n"
        "5 numerical failure, 64 usage error, 70 internal error.\n"
        "Default seed: 12345678. COVSPEC_THREADS overrides the worker count.");
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub, bool needs_model = true) {
        if (needs_model)
            sub->add_option("--model", opt.model_path, "model spec JSON path")->required();
        sub->add_option("--out", opt.out, "output path stem (default: out)");
        sub->add_option("--seed", opt.seed, "64-bit RNG seed (default: 12345678)");
    };

    auto* density = app.add_subcommand("density", "limiting spectral density curve");
    add_common(density);
    density->add_option("--grid", opt.grid, "number of grid points (default: 2001)");

    auto* supportc = app.add_subcommand("support", "bulk/gap structure and x(m) curve");
    add_common(supportc);
    supportc->add_option("--grid", opt.grid, "x(m) curve resolution");

    auto* outliersc = app.add_subcommand("outliers", "outlier location predictions");
    add_common(outliersc);

    auto* fluctc = app.add_subcommand("fluct", "second-order fluctuation reports");
    add_common(fluctc);
    fluctc->add_option("--n", opt.n, "matrix size for the bias term");
    fluctc->add_option("--trials", opt.trials, "number of limit-law sample draws");
    fluctc->add_option("--gap-index", opt.gap_index, "restrict to one outlier-eligible gap");
    fluctc->add_flag("--bias", opt.bias, "inject the finite-n bias matrix");

    auto* designc = app.add_subcommand("design", "spike amplitudes hitting target outliers");
    add_common(designc);
    designc->add_option("--targets", opt.targets, "target outlier locations")->required();

    auto* simulatec = app.add_subcommand("simulate", "Monte Carlo experiments");
    add_common(simulatec);
    simulatec->add_option("--exp", opt.experiment, "density | census | fluct | shat");
    simulatec->add_option("--n", opt.n, "matrix size n");
    simulatec->add_option("--trials", opt.trials, "number of trials");
    simulatec->add_option("--bins", opt.bins, "histogram bins (density experiment)");
    simulatec->add_flag("--det-s", opt.det_s, "deterministic signal matrix S");

    try {
        std::vector<const char*> cargs;
        cargs.push_back("covspec");
        for (const auto& a : argv) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (density->parsed()) return cmd_density(opt);
        if (supportc->parsed()) return cmd_support(opt);
        if (outliersc->parsed()) return cmd_outliers(opt);
        if (fluctc->parsed()) return cmd_fluct(opt);
        if (designc->parsed()) return cmd_design(opt);
        if (simulatec->parsed()) return cmd_simulate(opt);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const InvalidSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidSpec;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const SingularityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace covspec::cli
