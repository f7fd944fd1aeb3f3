#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pnid/core/errors.hpp"
#include "pnid/nn/model.hpp"

namespace pnid::nn {

inline constexpr const char* kCheckpointMagic = "pnid-checkpoint";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw FormatError("checkpoint: truncated tensor data");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

inline std::string next_line(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("checkpoint: unexpected end of manifest");
    return line;
}

template <typename T>
T expect(std::istringstream& ls, const std::string& what) {
    T v;
    if (!(ls >> v)) throw FormatError("checkpoint: malformed field '" + what + "'");
    return v;
}

inline std::istringstream keyed(std::istream& is, const std::string& key) {
    std::istringstream ls(next_line(is));
    std::string k;
    ls >> k;
    if (k != key) throw FormatError("checkpoint: expected '" + key + "', found '" + k + "'");
    return ls;
}

}  // namespace detail

/// Text manifest followed by the named tensors as row-major little-endian doubles.
inline void save_checkpoint(const Model& m, std::ostream& os) {
    os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    os << std::setprecision(17);
    os << "head " << to_string(m.arch.head) << '\n';
    os << "input_dim " << m.arch.input_dim << '\n';
    os << "input_width " << m.arch.input_width << '\n';
    os << "hidden " << m.arch.hidden << '\n';
    os << "layers " << m.arch.layers << '\n';
    os << "window " << m.arch.window << '\n';
    os << "regime_groups " << m.arch.regimes.size() << '\n';
    for (const auto& g : m.arch.regimes) {
        os << "regimes " << g.size();
        for (double v : g) os << ' ' << v;
        os << '\n';
    }
    for (const auto& r : m.stats.features) os << "feature " << r.min << ' ' << r.max << '\n';
    for (const auto& r : m.stats.labels) os << "label " << r.min << ' ' << r.max << '\n';
    os << "optimizer_step " << m.optimizer_step << '\n';

    std::size_t count = 0;
    m.params.visit([&](const std::string&, const Mat<double>&) { ++count; });
    os << "tensors " << count << '\n';
    m.params.visit([&](const std::string& name, const Mat<double>& t) {
        os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    });
    os << "end\n";
    m.params.visit([&](const std::string&, const Mat<double>& t) {
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j) detail::put_f64(os, t(i, j));
    });
    if (!os) throw FormatError("checkpoint: write failed");
}

inline Model load_checkpoint(std::istream& is) {
    using detail::expect;
    using detail::keyed;
    {
        auto ls = keyed(is, kCheckpointMagic);
        const int version = expect<int>(ls, "version");
        if (version != kCheckpointVersion)
            throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    Model m;
    {
        auto ls = keyed(is, "head");
        try {
            m.arch.head = parse_head(expect<std::string>(ls, "head"));
        } catch (const ConfigError& e) {
            throw FormatError(std::string("checkpoint: ") + e.what());
        }
    }
    { auto ls = keyed(is, "input_dim"); m.arch.input_dim = expect<std::size_t>(ls, "input_dim"); }
    { auto ls = keyed(is, "input_width"); m.arch.input_width = expect<std::size_t>(ls, "input_width"); }
    { auto ls = keyed(is, "hidden"); m.arch.hidden = expect<std::size_t>(ls, "hidden"); }
    { auto ls = keyed(is, "layers"); m.arch.layers = expect<std::size_t>(ls, "layers"); }
    { auto ls = keyed(is, "window"); m.arch.window = expect<std::size_t>(ls, "window"); }
    std::size_t groups = 0;
    { auto ls = keyed(is, "regime_groups"); groups = expect<std::size_t>(ls, "regime_groups"); }
    for (std::size_t i = 0; i < groups; ++i) {
        auto ls = keyed(is, "regimes");
        const auto n = expect<std::size_t>(ls, "regime count");
        std::vector<double> g(n);
        for (auto& v : g) v = expect<double>(ls, "regime value");
        m.arch.regimes.push_back(std::move(g));
    }
    for (auto& r : m.stats.features) {
        auto ls = keyed(is, "feature");
        r.min = expect<double>(ls, "feature min");
        r.max = expect<double>(ls, "feature max");
    }
    for (auto& r : m.stats.labels) {
        auto ls = keyed(is, "label");
        r.min = expect<double>(ls, "label min");
        r.max = expect<double>(ls, "label max");
    }
    { auto ls = keyed(is, "optimizer_step"); m.optimizer_step = expect<std::uint64_t>(ls, "optimizer_step"); }

    try {
        m.arch.validate();
        m.stats.check();
        if (m.arch.input_dim != data::kFeatures) throw ConfigError("input_dim must be 6");
        if (m.arch.head == HeadKind::Immm && m.arch.regimes.size() != data::kLabels)
            throw ConfigError("IMMM head needs one regime group per label");
        m.params = ModelParams<double>::zeros(m.arch);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }

    std::vector<std::pair<std::string, Mat<double>*>> expected;
    m.params.visit([&](const std::string& n, Mat<double>& t) { expected.emplace_back(n, &t); });
    {
        auto ls = keyed(is, "tensors");
        if (expect<std::size_t>(ls, "tensors") != expected.size())
            throw FormatError("checkpoint: tensor count does not match the architecture");
    }
    for (const auto& [name, t] : expected) {
        auto ls = keyed(is, "tensor");
        const auto n = expect<std::string>(ls, "tensor name");
        const auto rows = expect<Eigen::Index>(ls, "rows");
        const auto cols = expect<Eigen::Index>(ls, "cols");
        if (n != name) throw FormatError("checkpoint: expected tensor " + name + ", found " + n);
        if (rows != t->rows() || cols != t->cols())
            throw FormatError("checkpoint: shape mismatch for tensor " + name);
    }
    if (detail::next_line(is) != "end") throw FormatError("checkpoint: missing manifest terminator");
    for (const auto& [name, t] : expected)
        for (Eigen::Index i = 0; i < t->rows(); ++i)
            for (Eigen::Index j = 0; j < t->cols(); ++j) (*t)(i, j) = detail::get_f64(is);
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint: trailing bytes");
    if (!m.params.all_finite()) throw FormatError("checkpoint: non-finite parameter values");
    return m;
}

inline void save_checkpoint(const Model& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    save_checkpoint(m, os);
}

inline Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint " + path.string());
    return load_checkpoint(is);
}

}  // namespace pnid::nn
