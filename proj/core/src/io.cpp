#include "gfsim/io.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

namespace gfsim {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
    std::ostringstream ss;
    ss << std::hex << fnv1a64(bytes);
    return ss.str();
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    return out;
}

} // namespace

void write_trajectory_csv(const SimResult& result, std::ostream& out) {
    out << "t_s,device_id,channel,value\n";
    const Trajectory& traj = result.trajectory;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const std::string t = format_double(traj.times[i]);
        for (const auto& [name, values] : traj.channels) {
            const auto dot = name.find('.');
            out << t << ',' << name.substr(0, dot) << ',' << name.substr(dot + 1) << ','
                << format_double(values[i]) << '\n';
        }
    }
}

void write_trajectory_csv(const SimResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_trajectory_csv(result, out);
}

void write_metrics_csv(const SimResult& result, std::ostream& out) {
    out << "scenario,stability,max_freq_dev_rad_s,max_freq_dev_hz,rocof_rad_s2,rocof_hz_s,"
           "rocof_t0_s,rocof_dt_s,settling_time_s,sharing_error_pu,t_event_s,aborted\n";
    const MetricsReport& m = result.metrics;
    out << result.spec.name << ',' << to_string(m.stability) << ','
        << format_double(m.max_freq_deviation) << ',' << format_double(m.max_freq_deviation_hz)
        << ',' << format_double(m.rocof) << ',' << format_double(m.rocof_hz_per_s) << ','
        << format_double(m.rocof_t0) << ',' << format_double(m.rocof_dt) << ','
        << format_double(m.settling_time) << ',' << format_double(m.sharing_error) << ','
        << format_double(result.t_event) << ',' << (result.aborted ? 1 : 0) << '\n';
}

void write_metrics_csv(const SimResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_metrics_csv(result, out);
}

void write_sweep_csv(const std::vector<SweepPointResult>& points, std::ostream& out) {
    std::vector<std::string> override_keys;
    if (!points.empty()) {
        for (const auto& [k, v] : points.front().overrides) override_keys.push_back(k);
    }
    out << "index";
    for (const auto& k : override_keys) out << ',' << k;
    out << ",status,stability,max_freq_dev_hz,rocof_hz_s,settling_time_s,sharing_error_pu,"
           "error\n";
    for (const auto& pt : points) {
        out << pt.index;
        for (const auto& k : override_keys) {
            auto it = pt.overrides.find(k);
            out << ',' << (it == pt.overrides.end() ? "" : it->second);
        }
        if (pt.result) {
            const MetricsReport& m = pt.result->metrics;
            out << ",ok," << to_string(m.stability) << ','
                << format_double(m.max_freq_deviation_hz) << ','
                << format_double(m.rocof_hz_per_s) << ',' << format_double(m.settling_time)
                << ',' << format_double(m.sharing_error) << ",\n";
        } else {
            std::string msg = pt.error;
            for (auto& c : msg) {
                if (c == ',' || c == '\n') c = ';';
            }
            out << ",failed,,,,,," << msg << '\n';
        }
    }
}

void write_sweep_csv(const std::vector<SweepPointResult>& points,
                     const std::filesystem::path& path) {
    auto out = open_out(path);
    write_sweep_csv(points, out);
}

void write_certification_csv(const CertificationReport& report, std::ostream& out) {
    out << "index,v_dc_1_0,v_dc_2_0,delta_0,monotone,converged,finite,max_uptick,final_error,"
           "v_min,v_max\n";
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        const auto& p = report.points[i];
        out << i << ',' << format_double(p.initial.v_dc_1) << ','
            << format_double(p.initial.v_dc_2) << ',' << format_double(p.initial.delta) << ','
            << (p.monotone ? 1 : 0) << ',' << (p.converged ? 1 : 0) << ',' << (p.finite ? 1 : 0)
            << ',' << format_double(p.max_uptick) << ',' << format_double(p.final_error) << ','
            << format_double(p.v_min) << ',' << format_double(p.v_max) << '\n';
    }
}

void write_certification_csv(const CertificationReport& report,
                             const std::filesystem::path& path) {
    auto out = open_out(path);
    write_certification_csv(report, out);
}

CsvChannels read_trajectory_csv(std::istream& in) {
    CsvChannels out;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("trajectory CSV: empty file");
    if (line != "t_s,device_id,channel,value") {
        throw std::invalid_argument("trajectory CSV: unexpected header '" + line + "'");
    }
    double last_t = std::numeric_limits<double>::quiet_NaN();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<std::string_view, 4> f;
        std::string_view sv = line;
        for (int k = 0; k < 4; ++k) {
            const auto comma = sv.find(',');
            if (k < 3 && comma == std::string_view::npos) {
                throw std::invalid_argument("trajectory CSV: malformed row '" + line + "'");
            }
            f[static_cast<std::size_t>(k)] = sv.substr(0, comma);
            sv = (comma == std::string_view::npos) ? std::string_view{} : sv.substr(comma + 1);
        }
        auto parse = [&](std::string_view s) {
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw std::invalid_argument("trajectory CSV: bad number '" + std::string(s) + "'");
            }
            return v;
        };
        const double t = parse(f[0]);
        if (out.times.empty() || t != last_t) {
            out.times.push_back(t);
            last_t = t;
        }
        out.channels[std::string(f[1]) + "." + std::string(f[2])].push_back(parse(f[3]));
    }
    return out;
}

CsvChannels read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open CSV file: " + path.string());
    return read_trajectory_csv(in);
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config_hash"] = manifest.config_hash;
    j["artifact_version"] = manifest.artifact_version;
    j["duration_s"] = manifest.duration_s;
    j["outputs"] = manifest.outputs;
    j["exit_code"] = manifest.exit_code;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace gfsim
