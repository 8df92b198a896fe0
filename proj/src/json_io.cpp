#include "covspec/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "covspec/errors.hpp"

namespace covspec::io {

namespace {

json interval_to_json(const support::Interval& iv) {
    json j = json::array();
    j.push_back(iv.lo);
    if (std::isinf(iv.hi))
        j.push_back(nullptr);
    else
        j.push_back(iv.hi);
    return j;
}

json matrix_to_json(const linalg::ComplexMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

json model_to_json(const measure::ModelSpec& spec) {
    json j;
    j["c"] = spec.c;
    json nu = json::array();
    for (const auto& a : spec.nu.atoms()) nu.push_back(json::array({a.t, a.w}));
    j["nu"] = std::move(nu);
    json spikes = json::array();
    for (const auto& s : spec.spikes)
        spikes.push_back(json::array({s.omega_sq, static_cast<std::int64_t>(s.multiplicity)}));
    j["spikes"] = std::move(spikes);
    return j;
}

measure::ModelSpec model_from_json(const json& j) {
    measure::ModelSpec spec;
    try {
        spec.c = j.at("c").get<double>();
        std::vector<measure::DiscreteMeasure::Atom> atoms;
        for (const auto& a : j.at("nu")) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
        spec.nu = measure::DiscreteMeasure(std::move(atoms));
        if (j.contains("spikes"))
            for (const auto& s : j.at("spikes"))
                spec.spikes.push_back(
                    {s.at(0).get<double>(), s.at(1).get<std::size_t>()});
    } catch (const json::exception& e) {
        throw IoError(std::string("model JSON is malformed: ") + e.what());
    }
    spec.validate();
    return spec;
}

measure::ModelSpec load_model(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError("cannot parse " + path + ": " + e.what());
    }
    return model_from_json(j);
}

json support_to_json(const support::SupportReport& rep) {
    json j;
    json bulks = json::array();
    for (const auto& b : rep.bulks) bulks.push_back(interval_to_json(b));
    j["bulks"] = std::move(bulks);
    json gaps = json::array();
    for (const auto& g : rep.gaps) gaps.push_back(interval_to_json(g));
    j["gaps"] = std::move(gaps);
    j["atom_at_zero"] = rep.atom_at_zero;
    j["first_bulk_left_edge"] = rep.first_bulk_left_edge;
    json cps = json::array();
    for (const auto& c : rep.critical_points) cps.push_back(json::array({c.m, c.x}));
    j["critical_points"] = std::move(cps);
    return j;
}

json outliers_to_json(const std::vector<outliers::OutlierPrediction>& preds) {
    json arr = json::array();
    for (const auto& p : preds) {
        json o;
        o["rho"] = p.rho;
        o["multiplicity"] = static_cast<std::int64_t>(p.multiplicity);
        if (p.spike_omega_sq)
            o["omega_sq"] = *p.spike_omega_sq;
        else
            o["omega_sq"] = nullptr;
        o["gap"] = interval_to_json(p.gap);
        arr.push_back(std::move(o));
    }
    json j;
    j["outliers"] = std::move(arr);
    return j;
}

json fluctuation_to_json(const fluct::FluctuationReport& rep) {
    json j;
    j["rho"] = rep.rho;
    j["omega_sq"] = rep.omega_sq;
    j["multiplicity"] = static_cast<std::int64_t>(rep.multiplicity);
    j["delta"] = rep.delta;
    j["g_prime"] = rep.g_prime;
    j["alpha_sq"] = rep.alpha_sq;
    j["varsigma_sq"] = rep.varsigma_sq;
    j["sigma_sq"] = rep.sigma_sq;
    j["sigma_tilde_sq"] = rep.sigma_tilde_sq;
    j["scale"] = rep.scale;
    j["bias"] = matrix_to_json(rep.bias);
    return j;
}

json density_meta_to_json(const stieltjes::DensityCurve& curve) {
    json j;
    j["atom_at_zero"] = curve.atom_at_zero;
    j["grid_points"] = static_cast<std::int64_t>(curve.grid.size());
    j["x_max"] = curve.grid.empty() ? 0.0 : curve.grid.back();
    double mass = curve.atom_at_zero;
    for (std::size_t i = 0; i + 1 < curve.grid.size(); ++i)
        mass += 0.5 * (curve.values[i] + curve.values[i + 1]) *
                (curve.grid[i + 1] - curve.grid[i]);
    j["total_mass"] = mass;
    return j;
}

json density_experiment_to_json(const sim::DensityExperiment& exp) {
    json j;
    j["bins"] = static_cast<std::int64_t>(exp.histogram.size());
    j["bin_edges"] = exp.bin_edges;
    j["histogram"] = exp.histogram;
    j["l1_distance"] = exp.l1_distance;
    j["atom_fraction"] = exp.atom_fraction;
    j["theory_atom_at_zero"] = exp.theory.atom_at_zero;
    return j;
}

json fluct_experiment_to_json(const sim::FluctuationExperiment& exp) {
    json j;
    j["coords"] = static_cast<std::int64_t>(exp.coords);
    j["kept_trials"] = static_cast<std::int64_t>(exp.draws.size());
    j["escape_count"] = static_cast<std::int64_t>(exp.escape_count);
    j["mean"] = exp.mean;
    j["stddev"] = exp.stddev;
    j["ks_distance"] = exp.ks_distance;
    j["sampler_draws"] = static_cast<std::int64_t>(exp.sampler_draws);
    return j;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string density_csv(const stieltjes::DensityCurve& curve) {
    std::string out = "x,f\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out += format_double(curve.grid[i]);
        out += ',';
        out += format_double(curve.values[i]);
        out += '\n';
    }
    return out;
}

std::string xm_curve_csv(const support::XmCurve& curve) {
    std::string out = "m,x,xprime\n";
    for (const auto& p : curve.points) {
        out += format_double(p.m);
        out += ',';
        out += format_double(p.x);
        out += ',';
        out += format_double(p.xprime);
        out += '\n';
    }
    return out;
}

}  // namespace covspec::io
