#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "pnid/core/errors.hpp"
#include "pnid/data/dataset.hpp"
#include "pnid/sim/io.hpp"

namespace pnid::data {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSamplesFile = "samples.bin";
inline constexpr int kDatasetVersion = 1;

/// Lower-case hex SHA-256 of `bytes`.
inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

inline std::string hex_id(std::uint64_t id) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << id;
    return os.str();
}

inline std::uint64_t parse_hex_id(const std::string& s) {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos, 16);
    if (pos != s.size()) throw FormatError("bad trajectory id: " + s);
    return v;
}

// ---- config keys --------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Interval& r) { j = nlohmann::json::array({r.lo, r.hi}); }

inline void from_json(const nlohmann::json& j, Interval& r) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("ranges are [min, max] pairs");
    r.lo = j[0].get<double>();
    r.hi = j[1].get<double>();
}

inline void to_json(nlohmann::json& j, const ParamBox& b) {
    j = {{"R0", b.range0},        {"q0_deg", b.los0_deg}, {"V_A_mach", b.speed_A_mach},
         {"V_M0_mach", b.speed_M0_mach}, {"N", b.gain},   {"tau", b.tau}};
}

inline void from_json(const nlohmann::json& j, ParamBox& b) {
    if (j.contains("R0")) from_json(j.at("R0"), b.range0);
    if (j.contains("q0_deg")) from_json(j.at("q0_deg"), b.los0_deg);
    if (j.contains("V_A_mach")) from_json(j.at("V_A_mach"), b.speed_A_mach);
    if (j.contains("V_M0_mach")) from_json(j.at("V_M0_mach"), b.speed_M0_mach);
    if (j.contains("N")) from_json(j.at("N"), b.gain);
    if (j.contains("tau")) from_json(j.at("tau"), b.tau);
}

}  // namespace pnid::data

namespace pnid::sensing {

inline void to_json(nlohmann::json& j, const SensingConfig& s) {
    j = {{"period", s.period},
         {"sigma_R", s.sigma_range},
         {"sigma_q", s.sigma_los},
         {"noise", s.noise},
         {"smoothing_width", s.smoothing_width},
         {"mode", s.mode == DifferencingMode::Offline ? "offline" : "causal"},
         {"exact_rate_when_noise_free", s.exact_rate_when_noise_free}};
}

inline void from_json(const nlohmann::json& j, SensingConfig& s) {
    s.period = j.value("period", s.period);
    s.sigma_range = j.value("sigma_R", s.sigma_range);
    s.sigma_los = j.value("sigma_q", s.sigma_los);
    s.noise = j.value("noise", s.noise);
    s.smoothing_width = j.value("smoothing_width", s.smoothing_width);
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "offline") s.mode = DifferencingMode::Offline;
        else if (m == "causal") s.mode = DifferencingMode::Causal;
        else throw ConfigError("sensing mode must be offline or causal");
    }
    s.exact_rate_when_noise_free = j.value("exact_rate_when_noise_free", s.exact_rate_when_noise_free);
}

}  // namespace pnid::sensing

namespace pnid::data {

inline void to_json(nlohmann::json& j, const DatasetConfig& c) {
    j = {{"box", c.box},
         {"engagement", c.base},
         {"sensing", c.sensing},
         {"trajectories", c.trajectories},
         {"windows_per_trajectory", c.windows_per_trajectory},
         {"K", c.window},
         {"l_min", c.min_length},
         {"train_fraction", c.train_fraction},
         {"max_retries", c.max_retries},
         {"randomize_phase", c.randomize_phase},
         {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, DatasetConfig& c) {
    if (j.contains("box")) from_json(j.at("box"), c.box);
    if (j.contains("engagement")) sim::from_json(j.at("engagement"), c.base);
    if (j.contains("sensing")) sensing::from_json(j.at("sensing"), c.sensing);
    c.trajectories = j.value("trajectories", c.trajectories);
    c.windows_per_trajectory = j.value("windows_per_trajectory", c.windows_per_trajectory);
    c.window = j.value("K", c.window);
    c.min_length = j.value("l_min", c.min_length);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.randomize_phase = j.value("randomize_phase", c.randomize_phase);
    c.seed = j.value("seed", c.seed);
}

inline nlohmann::json stats_to_json(const NormStats& s) {
    nlohmann::json f = nlohmann::json::array(), l = nlohmann::json::array();
    for (const auto& r : s.features) f.push_back({r.min, r.max});
    for (const auto& r : s.labels) l.push_back({r.min, r.max});
    return {{"features", f}, {"labels", l}};
}

inline NormStats stats_from_json(const nlohmann::json& j) {
    NormStats s;
    const auto& f = j.at("features");
    const auto& l = j.at("labels");
    if (f.size() != kFeatures || l.size() != kLabels) throw FormatError("normalization stats have wrong arity");
    for (std::size_t i = 0; i < kFeatures; ++i) s.features[i] = {f[i][0].get<double>(), f[i][1].get<double>()};
    for (std::size_t i = 0; i < kLabels; ++i) s.labels[i] = {l[i][0].get<double>(), l[i][1].get<double>()};
    return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
    return {{"R0", s.range0}, {"q0", s.los0},     {"V_A", s.speed_A},
            {"V_M0", s.speed_M0}, {"N", s.gain}, {"tau", s.tau}, {"phase", s.maneuver_phase}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    s.range0 = j.at("R0").get<double>();
    s.los0 = j.at("q0").get<double>();
    s.speed_A = j.at("V_A").get<double>();
    s.speed_M0 = j.at("V_M0").get<double>();
    s.gain = j.at("N").get<double>();
    s.tau = j.at("tau").get<double>();
    s.maneuver_phase = j.value("phase", 0.0);
    return s;
}

// ---- binary block -------------------------------------------------------------------

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    if (pos + sizeof(T) > in.size()) throw FormatError("dataset: truncated sample block");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bits |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += sizeof(T);
    return std::bit_cast<T>(bits);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
        throw FormatError("cannot write " + p.string());
}

}  // namespace detail

/// Samples as: u64 trajectory id, u32 end tick, u32 length, 2 x f64 label, length x 6 x f64,
/// all little-endian; training samples first, then validation.
inline std::string encode_samples(const Dataset& ds) {
    std::string out;
    for (const auto* part : {&ds.train, &ds.validation})
        for (const auto& s : *part) {
            detail::put_le(out, s.trajectory);
            detail::put_le(out, s.end);
            detail::put_le(out, s.length);
            for (double v : s.label) detail::put_le(out, v);
            for (double v : s.values) detail::put_le(out, v);
        }
    return out;
}

inline std::vector<Sample> decode_samples(const std::string& bytes, std::size_t& pos, std::size_t count) {
    std::vector<Sample> out(count);
    for (auto& s : out) {
        s.trajectory = detail::get_le<std::uint64_t>(bytes, pos);
        s.end = detail::get_le<std::uint32_t>(bytes, pos);
        s.length = detail::get_le<std::uint32_t>(bytes, pos);
        for (auto& v : s.label) v = detail::get_le<double>(bytes, pos);
        s.values.resize(std::size_t{s.length} * kFeatures);
        for (auto& v : s.values) v = detail::get_le<double>(bytes, pos);
    }
    return out;
}

inline nlohmann::json manifest_json(const Dataset& ds, const std::string& block) {
    nlohmann::json trajs = nlohmann::json::array();
    std::size_t n_train = 0;
    for (const auto& t : ds.trajectories) {
        n_train += t.split == Split::Train;
        trajs.push_back({{"id", hex_id(t.id)},
                         {"slot", t.slot},
                         {"split", to_string(t.split)},
                         {"attempts", t.attempts},
                         {"ticks", t.ticks},
                         {"windows", t.windows},
                         {"scenario", scenario_to_json(t.scenario)}});
    }
    return {{"format", "pnid-dataset"},
            {"version", kDatasetVersion},
            {"config", ds.config},
            {"features", {"R", "q", "q_dot", "V_A", "theta_A", "a_A"}},
            {"labels", {"N", "tau"}},
            {"stats", stats_to_json(ds.stats)},
            {"counts",
             {{"trajectories", ds.trajectories.size()},
              {"train_trajectories", n_train},
              {"validation_trajectories", ds.trajectories.size() - n_train},
              {"train_samples", ds.train.size()},
              {"validation_samples", ds.validation.size()}}},
            {"trajectories", trajs},
            {"samples", {{"file", kSamplesFile}, {"bytes", block.size()}, {"sha256", sha256_hex(block)}}},
            {"log", ds.log}};
}

/// Writes manifest.json and samples.bin into `dir` (created if needed).
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string block = encode_samples(ds);
    detail::write_file(dir / kSamplesFile, block);
    detail::write_file(dir / kManifestFile, manifest_json(ds, block).dump(2) + "\n");
}

/// Loads a dataset and verifies the sample block against the manifest hash.
inline Dataset load_dataset(const std::filesystem::path& dir) {
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(detail::read_file(dir / kManifestFile));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset manifest: ") + e.what());
    }
    if (m.value("format", "") != "pnid-dataset" || m.value("version", 0) != kDatasetVersion)
        throw FormatError("not a version-1 dataset manifest");
    const std::string block = detail::read_file(dir / m.at("samples").at("file").get<std::string>());
    if (sha256_hex(block) != m.at("samples").at("sha256").get<std::string>())
        throw FormatError("dataset sample block does not match its manifest hash");
    Dataset ds;
    try {
        from_json(m.at("config"), ds.config);
        ds.stats = stats_from_json(m.at("stats"));
        for (const auto& t : m.at("trajectories")) {
            TrajectoryRecord r;
            r.id = parse_hex_id(t.at("id").get<std::string>());
            r.slot = t.at("slot").get<std::size_t>();
            r.split = t.at("split").get<std::string>() == "train" ? Split::Train : Split::Validation;
            r.attempts = t.at("attempts").get<std::size_t>();
            r.ticks = t.at("ticks").get<std::size_t>();
            r.windows = t.at("windows").get<std::size_t>();
            r.scenario = scenario_from_json(t.at("scenario"));
            ds.trajectories.push_back(r);
        }
        ds.log = m.at("log").get<std::vector<std::string>>();
        const auto& counts = m.at("counts");
        std::size_t pos = 0;
        ds.train = decode_samples(block, pos, counts.at("train_samples").get<std::size_t>());
        ds.validation = decode_samples(block, pos, counts.at("validation_samples").get<std::size_t>());
        if (pos != block.size()) throw FormatError("dataset sample block has trailing bytes");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset manifest: ") + e.what());
    }
    return ds;
}

/// One row per window step: split, trajectory, end, length, step, 6 features, 2 labels.
inline void write_samples_csv(std::ostream& os, const Dataset& ds) {
    os << "split,trajectory,end,length,step,R,q,q_dot,V_A,theta_A,a_A,N,tau\n";
    os << std::setprecision(17);
    for (const auto split : {Split::Train, Split::Validation}) {
        const auto& part = split == Split::Train ? ds.train : ds.validation;
        for (const auto& s : part)
            for (std::size_t k = 0; k < s.length; ++k) {
                os << to_string(split) << ',' << hex_id(s.trajectory) << ',' << s.end << ',' << s.length << ','
                   << k;
                for (std::size_t f = 0; f < kFeatures; ++f) os << ',' << s.values[k * kFeatures + f];
                os << ',' << s.label[0] << ',' << s.label[1] << '\n';
            }
    }
}

}  // namespace pnid::data
