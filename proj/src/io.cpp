#include "qmag/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qmag::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);  // binary: identical bytes on every platform
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
    return f;
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void write_record_csv(const MeasurementRecord& rec, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    f << "# qmag record v1\n";
    f << "# dt=" << format_double(rec.dt()) << "\n";
    f << "# alpha=" << format_double(rec.alpha().x) << "," << format_double(rec.alpha().y) << ","
      << format_double(rec.alpha().z) << "\n";
    f << "# eta=" << format_double(rec.eta().x) << "," << format_double(rec.eta().y) << ","
      << format_double(rec.eta().z) << "\n";
    f << "# seed=" << rec.seed() << "\n";
    f << "# b_true=" << format_double(rec.true_field().x) << ","
      << format_double(rec.true_field().y) << "," << format_double(rec.true_field().z) << "\n";
    f << "step,channel,dY\n";
    const std::vector<Vec3>& dY = rec.increments();
    for (std::size_t i = 0; i < dY.size(); ++i)
        for (int n = 0; n < 3; ++n)
            f << i << "," << n << "," << format_double(dY[i][n]) << "\n";
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

MeasurementRecord read_record_csv(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    std::string line;
    double dt = 0.0;
    Vec3 alpha, eta, b_true;
    std::uint64_t seed = 0;
    bool have_dt = false;

    auto parse_triple = [](const std::string& s) {
        Vec3 v;
        if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &v.x, &v.y, &v.z) != 3)
            throw std::runtime_error("bad triple in record header: " + s);
        return v;
    };

    std::vector<Vec3> dY;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2);
            const std::string val = line.substr(eq + 1);
            if (key == "dt") {
                dt = std::stod(val);
                have_dt = true;
            } else if (key == "alpha")
                alpha = parse_triple(val);
            else if (key == "eta")
                eta = parse_triple(val);
            else if (key == "b_true")
                b_true = parse_triple(val);
            else if (key == "seed")
                seed = std::stoull(val);
            continue;
        }
        if (line.rfind("step,", 0) == 0) continue;  // column header
        unsigned long step_i;
        int chan;
        double v;
        if (std::sscanf(line.c_str(), "%lu,%d,%lf", &step_i, &chan, &v) != 3)
            throw std::runtime_error("bad record row: " + line);
        if (chan < 0 || chan > 2) throw std::runtime_error("bad channel in record row: " + line);
        if (step_i >= dY.size()) dY.resize(step_i + 1);
        dY[step_i][chan] = v;
    }
    if (!have_dt) throw std::runtime_error("record header missing dt: " + path.string());
    return MeasurementRecord(dt, alpha, eta, std::move(dY), seed, b_true);
}

void write_trajectory_csv(const Trajectory<Vec3>& traj, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    f << "t,rx,ry,rz\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        f << format_double(traj.times[i]) << "," << format_double(traj.states[i].x) << ","
          << format_double(traj.states[i].y) << "," << format_double(traj.states[i].z) << "\n";
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_ensemble_csv(const EnsembleResult& res, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    f << "t,mean_cos_theta,ci_low,ci_high,n_completed\n";
    for (std::size_t i = 0; i < res.times.size(); ++i)
        f << format_double(res.times[i]) << "," << format_double(res.mean_cos_theta[i]) << ","
          << format_double(res.ci_low[i]) << "," << format_double(res.ci_high[i]) << ","
          << res.completed << "\n";
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_single_shot_csv(const SingleShotResult& res, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    f << "t,cos_theta,p_true\n";
    for (std::size_t i = 0; i < res.times.size(); ++i)
        f << format_double(res.times[i]) << "," << format_double(res.cos_theta[i]) << ","
          << format_double(res.p_true[i]) << "\n";
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_snapshots_csv(const SingleShotResult& res, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    f << "t,k,bx,by,bz,P_k\n";
    for (const PosteriorSnapshot& s : res.snapshots)
        for (std::size_t k = 0; k < s.P.size(); ++k) {
            const Vec3& b = res.candidates.fields[k];
            f << format_double(s.t) << "," << k << "," << format_double(b.x) << ","
              << format_double(b.y) << "," << format_double(b.z) << "," << format_double(s.P[k])
              << "\n";
        }
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["scenario"] = to_string(cfg.scenario);
    j["field_magnitude"] = cfg.field_magnitude;
    j["true_direction"] = vec_to_json(cfg.true_direction);
    j["alpha"] = vec_to_json(cfg.probes.alpha);
    j["eta"] = vec_to_json(cfg.probes.eta);
    j["r0"] = vec_to_json(cfg.r0);
    j["dt"] = cfg.step.dt;
    j["horizon"] = cfg.step.horizon;
    j["stride"] = cfg.step.stride;
    j["target_points"] = cfg.step.target_points;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["sphere_n_theta"] = cfg.sphere_n_theta;
    j["sphere_n_phi"] = cfg.sphere_n_phi;
    if (cfg.scenario == Scenario::custom) {
        json arr = json::array();
        for (const Vec3& c : cfg.custom_candidates) arr.push_back(vec_to_json(c));
        j["candidates"] = arr;
    }
    j["snapshot_times"] = cfg.snapshot_times;
    j["bootstrap_resamples"] = cfg.bootstrap_resamples;
    j["max_rejection_rate"] = cfg.max_rejection_rate;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg;
    if (j.contains("scenario")) cfg.scenario = scenario_from_string(j["scenario"].get<std::string>());
    if (j.contains("field_magnitude")) cfg.field_magnitude = j["field_magnitude"].get<double>();
    if (j.contains("true_direction")) cfg.true_direction = vec_from_json(j["true_direction"]);
    if (j.contains("alpha")) cfg.probes.alpha = vec_from_json(j["alpha"]);
    if (j.contains("eta")) cfg.probes.eta = vec_from_json(j["eta"]);
    if (j.contains("r0")) cfg.r0 = vec_from_json(j["r0"]);
    if (j.contains("dt")) cfg.step.dt = j["dt"].get<double>();
    if (j.contains("horizon")) cfg.step.horizon = j["horizon"].get<double>();
    if (j.contains("stride")) cfg.step.stride = j["stride"].get<int>();
    if (j.contains("target_points")) cfg.step.target_points = j["target_points"].get<int>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("sphere_n_theta")) cfg.sphere_n_theta = j["sphere_n_theta"].get<int>();
    if (j.contains("sphere_n_phi")) cfg.sphere_n_phi = j["sphere_n_phi"].get<int>();
    if (j.contains("candidates"))
        for (const json& c : j["candidates"]) cfg.custom_candidates.push_back(vec_from_json(c));
    if (j.contains("snapshot_times"))
        cfg.snapshot_times = j["snapshot_times"].get<std::vector<double>>();
    if (j.contains("bootstrap_resamples"))
        cfg.bootstrap_resamples = j["bootstrap_resamples"].get<int>();
    if (j.contains("max_rejection_rate"))
        cfg.max_rejection_rate = j["max_rejection_rate"].get<double>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    return cfg;
}

ExperimentConfig config_from_json_file(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_json(ss.str());
}

void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    f << config_to_json(cfg) << "\n";
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace qmag::io
