#include "attbench/recording.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "attbench/csv.hpp"

namespace attbench {

using nlohmann::json;

std::string to_string(MotionKind k) {
    switch (k) {
        case MotionKind::rotation: return "rotation";
        case MotionKind::translation: return "translation";
        case MotionKind::arbitrary: return "arbitrary";
    }
    return "arbitrary";
}

std::string to_string(MotionSpeed s) {
    switch (s) {
        case MotionSpeed::slow: return "slow";
        case MotionSpeed::medium: return "medium";
        case MotionSpeed::fast: return "fast";
    }
    return "medium";
}

std::string to_string(MotionPausing p) {
    return p == MotionPausing::paused ? "paused" : "nonstop";
}

MotionKind kind_from_string(const std::string& s) {
    if (s == "rotation") return MotionKind::rotation;
    if (s == "translation") return MotionKind::translation;
    if (s == "arbitrary") return MotionKind::arbitrary;
    throw std::runtime_error("unknown motion kind: " + s);
}

MotionSpeed speed_from_string(const std::string& s) {
    if (s == "slow") return MotionSpeed::slow;
    if (s == "medium") return MotionSpeed::medium;
    if (s == "fast") return MotionSpeed::fast;
    throw std::runtime_error("unknown motion speed: " + s);
}

MotionPausing pausing_from_string(const std::string& s) {
    if (s == "paused") return MotionPausing::paused;
    if (s == "nonstop") return MotionPausing::nonstop;
    throw std::runtime_error("unknown pausing mode: " + s);
}

void Recording::validate() const {
    if (sample_rate_hz <= 0.0) throw std::runtime_error("recording: sample rate must be positive");
    if (acc.empty()) throw std::runtime_error("recording: empty");
    if (acc.size() != gyr.size() || acc.size() != q_ref.size())
        throw std::runtime_error("recording: acc/gyr/q_ref length mismatch");
    for (std::size_t k = 0; k < q_ref.size(); ++k) {
        if (std::fabs(q_ref[k].norm() - 1.0) > 1e-6)
            throw std::runtime_error("recording: non-unit reference quaternion at sample " +
                                     std::to_string(k));
    }
}

static std::string sidecar_path(const std::string& path) {
    std::filesystem::path p(path);
    p.replace_extension(".json");
    return p.string();
}

static constexpr const char* kHeader = "t,ax,ay,az,gx,gy,gz,qw,qx,qy,qz";

Recording load_recording(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open recording file: " + path);

    Recording rec;
    rec.name = std::filesystem::path(path).stem().string();

    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw std::runtime_error(path + ": expected header '" + std::string(kHeader) + "'");

    std::vector<double> t;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11)
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected 11 fields, got " +
                                     std::to_string(f.size()));
        try {
            t.push_back(parse_num(f[0]));
            rec.acc.push_back({parse_num(f[1]), parse_num(f[2]), parse_num(f[3])});
            rec.gyr.push_back({parse_num(f[4]), parse_num(f[5]), parse_num(f[6])});
            rec.q_ref.push_back({parse_num(f[7]), parse_num(f[8]), parse_num(f[9]), parse_num(f[10])});
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": " + e.what());
        }
        const Quat& q = rec.q_ref.back();
        if (std::fabs(q.norm() - 1.0) > 1e-6)
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": non-unit reference quaternion");
    }
    if (rec.acc.empty()) throw std::runtime_error(path + ": no samples");

    const std::string meta = sidecar_path(path);
    if (std::ifstream ms{meta}) {
        json j = json::parse(ms);
        rec.sample_rate_hz = j.at("sample_rate_hz").get<double>();
        if (j.contains("label")) {
            const auto& l = j["label"];
            rec.label.kind = kind_from_string(l.at("kind").get<std::string>());
            rec.label.speed = speed_from_string(l.at("speed").get<std::string>());
            rec.label.pausing = pausing_from_string(l.at("pausing").get<std::string>());
        }
        if (j.contains("name")) rec.name = j["name"].get<std::string>();
    } else if (t.size() >= 2) {
        const double dt = t[1] - t[0];
        if (dt <= 0.0) throw std::runtime_error(path + ": cannot infer sample rate from t column");
        rec.sample_rate_hz = 1.0 / dt;
    } // single row without sidecar: keep the default rate

    rec.validate();
    return rec;
}

void save_recording(const Recording& rec, const std::string& path) {
    rec.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write recording file: " + path);
    out << kHeader << "\n";
    const double ts = rec.ts();
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const Vec3& a = rec.acc[k];
        const Vec3& g = rec.gyr[k];
        const Quat& q = rec.q_ref[k];
        out << fmt_num(static_cast<double>(k) * ts) << ',' << fmt_num(a.x) << ',' << fmt_num(a.y) << ','
            << fmt_num(a.z) << ',' << fmt_num(g.x) << ',' << fmt_num(g.y) << ',' << fmt_num(g.z) << ','
            << fmt_num(q.w) << ',' << fmt_num(q.x) << ',' << fmt_num(q.y) << ',' << fmt_num(q.z) << "\n";
    }

    json meta;
    meta["sample_rate_hz"] = rec.sample_rate_hz;
    meta["label"] = {{"kind", to_string(rec.label.kind)},
                     {"speed", to_string(rec.label.speed)},
                     {"pausing", to_string(rec.label.pausing)}};
    meta["name"] = rec.name;
    std::ofstream ms(sidecar_path(path));
    if (!ms) throw std::runtime_error("cannot write sidecar file: " + sidecar_path(path));
    ms << meta.dump(2) << "\n";
}

void save_estimates(const std::vector<Quat>& est, double sample_rate_hz, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write estimate file: " + path);
    out << "t,qw,qx,qy,qz\n";
    const double ts = 1.0 / sample_rate_hz;
    for (std::size_t k = 0; k < est.size(); ++k) {
        out << fmt_num(static_cast<double>(k) * ts) << ',' << fmt_num(est[k].w) << ',' << fmt_num(est[k].x)
            << ',' << fmt_num(est[k].y) << ',' << fmt_num(est[k].z) << "\n";
    }
}

std::vector<Quat> load_estimates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open estimate file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "t,qw,qx,qy,qz")
        throw std::runtime_error(path + ": expected header 't,qw,qx,qy,qz'");
    std::vector<Quat> est;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5)
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected 5 fields");
        est.push_back({parse_num(f[1]), parse_num(f[2]), parse_num(f[3]), parse_num(f[4])});
    }
    return est;
}

} // namespace attbench
