#include "uromt/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "uromt/error.hpp"

namespace uromt::io {

namespace {

constexpr std::string_view kMagic = "uromt-volume 1";

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << v;
    return os.str();
}

template <typename T>
void swap_bytes(T &value) {
    auto *p = reinterpret_cast<unsigned char *>(&value);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
}

bool host_is_little() { return std::endian::native == std::endian::little; }

template <typename T, std::size_t N>
std::array<T, N> parse_triple(const std::string &key, const std::string &value) {
    std::istringstream is(value);
    std::array<T, N> out{};
    for (auto &x : out)
        if (!(is >> x)) throw FormatError(key, "expected " + std::to_string(N) + " numbers, got '" + value + "'");
    std::string extra;
    if (is >> extra) throw FormatError(key, "expected " + std::to_string(N) + " numbers, got '" + value + "'");
    return out;
}

DType parse_dtype(const std::string &s) {
    if (s == "float64") return DType::Float64;
    if (s == "float32") return DType::Float32;
    if (s == "uint8") return DType::UInt8;
    throw FormatError("dtype", "unknown dtype '" + s + "'");
}

} // namespace

std::string to_string(DType t) {
    switch (t) {
    case DType::Float64: return "float64";
    case DType::Float32: return "float32";
    case DType::UInt8: return "uint8";
    }
    return "unknown";
}

std::size_t dtype_size(DType t) {
    switch (t) {
    case DType::Float64: return 8;
    case DType::Float32: return 4;
    case DType::UInt8: return 1;
    }
    return 0;
}

void write_file_atomic(const fs::path &path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write to " + tmp.string() + " failed");
    }
    fs::rename(tmp, path);
}

void write_volume(const fs::path &header_path, const Grid &grid, const Vector &values, int components, DType dtype) {
    if (components < 1) throw InvalidArgument("volume needs at least one component");
    if (values.size() != grid.size() * components)
        throw InvalidArgument("volume payload must hold n*components values");

    std::string payload(static_cast<std::size_t>(values.size()) * dtype_size(dtype), '\0');
    char *dst = payload.data();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        switch (dtype) {
        case DType::Float64: {
            double v = values[i];
            if (!host_is_little()) swap_bytes(v);
            std::memcpy(dst + 8 * i, &v, 8);
            break;
        }
        case DType::Float32: {
            auto v = static_cast<float>(values[i]);
            if (!host_is_little()) swap_bytes(v);
            std::memcpy(dst + 4 * i, &v, 4);
            break;
        }
        case DType::UInt8: {
            const double v = values[i];
            if (v < 0.0 || v > 255.0 || v != std::floor(v))
                throw InvalidArgument("uint8 volume values must be integers in [0, 255]");
            dst[i] = static_cast<char>(static_cast<unsigned char>(v));
            break;
        }
        }
    }

    fs::path data_path = header_path;
    data_path.replace_extension(".raw");
    std::ostringstream hdr;
    hdr << kMagic << '\n'
        << "dims: " << grid.dim(0) << ' ' << grid.dim(1) << ' ' << grid.dim(2) << '\n'
        << "spacing: " << format_double(grid.spacing(0)) << ' ' << format_double(grid.spacing(1)) << ' '
        << format_double(grid.spacing(2)) << '\n'
        << "components: " << components << '\n'
        << "dtype: " << to_string(dtype) << '\n'
        << "axis_order: xyz\n"
        << "endianness: little\n"
        << "data_file: " << data_path.filename().string() << '\n';
    write_file_atomic(data_path, payload);
    write_file_atomic(header_path, hdr.str());
}

VolumeHeader read_volume_header(const fs::path &header_path) {
    std::ifstream in(header_path);
    if (!in) throw FormatError("header", "cannot open " + header_path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != kMagic)
        throw FormatError("header", header_path.string() + " is not a uromt volume header");

    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto colon = t.find(':');
        if (colon == std::string::npos) throw FormatError("header", "malformed line '" + t + "'");
        kv[trim(t.substr(0, colon))] = trim(t.substr(colon + 1));
    }
    const auto need = [&](const std::string &key) -> const std::string & {
        const auto it = kv.find(key);
        if (it == kv.end()) throw FormatError(key, "missing from " + header_path.string());
        return it->second;
    };

    VolumeHeader h;
    const auto dims = parse_triple<long long, 3>("dims", need("dims"));
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0) throw FormatError("dims", "dimensions must be positive");
        h.dims[a] = static_cast<std::ptrdiff_t>(dims[a]);
    }
    h.spacing = parse_triple<double, 3>("spacing", need("spacing"));
    for (double s : h.spacing)
        if (!(s > 0.0)) throw FormatError("spacing", "spacings must be positive");
    h.dtype = parse_dtype(need("dtype"));
    h.data_file = need("data_file");
    if (kv.count("components")) {
        const auto c = parse_triple<int, 1>("components", kv["components"])[0];
        if (c < 1) throw FormatError("components", "must be at least 1");
        h.components = c;
    }
    if (kv.count("axis_order")) {
        h.axis_order = kv["axis_order"];
        if (h.axis_order != "xyz") throw FormatError("axis_order", "only 'xyz' is supported, got '" + h.axis_order + "'");
    }
    if (kv.count("endianness")) {
        h.endianness = kv["endianness"];
        if (h.endianness != "little" && h.endianness != "big")
            throw FormatError("endianness", "expected 'little' or 'big', got '" + h.endianness + "'");
    }
    return h;
}

Volume read_volume(const fs::path &header_path) {
    const VolumeHeader h = read_volume_header(header_path);
    const Grid grid(h.dims, h.spacing);
    const fs::path data_path = header_path.parent_path() / h.data_file;

    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw FormatError("data_file", "cannot open " + data_path.string());
    const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const auto count = static_cast<std::size_t>(grid.size()) * static_cast<std::size_t>(h.components);
    const std::size_t expected = count * dtype_size(h.dtype);
    if (payload.size() < expected)
        throw FormatError("payload", "truncated: expected " + std::to_string(expected) + " bytes, found " +
                                         std::to_string(payload.size()));
    if (payload.size() > expected)
        throw FormatError("payload", "expected " + std::to_string(expected) + " bytes, found " +
                                         std::to_string(payload.size()));

    const bool swap = (h.endianness == "little") != host_is_little();
    Vector values(static_cast<Eigen::Index>(count));
    const char *src = payload.data();
    for (std::size_t i = 0; i < count; ++i) {
        switch (h.dtype) {
        case DType::Float64: {
            double v;
            std::memcpy(&v, src + 8 * i, 8);
            if (swap) swap_bytes(v);
            values[static_cast<Eigen::Index>(i)] = v;
            break;
        }
        case DType::Float32: {
            float v;
            std::memcpy(&v, src + 4 * i, 4);
            if (swap) swap_bytes(v);
            values[static_cast<Eigen::Index>(i)] = v;
            break;
        }
        case DType::UInt8:
            values[static_cast<Eigen::Index>(i)] = static_cast<unsigned char>(src[i]);
            break;
        }
    }
    return Volume{grid, h.components, std::move(values)};
}

std::vector<std::string> preset_names() { return {"gauss-test-1", "gauss-test-2", "rat-brain"}; }

UromtConfig preset(std::string_view name) {
    UromtConfig c;
    c.preset = std::string(name);
    c.steps = 10;
    c.dt = 0.4;
    c.spacing = {1.0, 1.0, 1.0};
    c.sigma = 0.002;
    if (name == "gauss-test-1") {
        c.dims = {50, 50, 50};
        c.frames = 5;
        c.alpha = 9000.0;
        c.beta = 5000.0;
        c.indicator = IndicatorMode::CenterRegions;
    } else if (name == "gauss-test-2") {
        c.dims = {50, 50, 50};
        c.frames = 2;
        c.alpha = 10000.0;
        c.beta = 5000.0;
        c.indicator = IndicatorMode::AllOnes;
    } else if (name == "rat-brain") {
        c.dims = {56, 106, 51};
        c.frames = 15;
        c.alpha = 10000.0;
        c.beta = 50.0;
        c.indicator = IndicatorMode::AllOnes;
        c.reuse_last_interp = true;
    } else {
        throw InvalidArgument("unknown preset '" + std::string(name) + "'");
    }
    return c;
}

namespace {

bool parse_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw FormatError(key, "expected a boolean, got '" + v + "'");
}

IndicatorMode parse_indicator(const std::string &v) {
    if (v == "center-regions") return IndicatorMode::CenterRegions;
    if (v == "all-ones") return IndicatorMode::AllOnes;
    if (v == "zero") return IndicatorMode::Zero;
    throw FormatError("chi", "expected center-regions, all-ones or zero, got '" + v + "'");
}

double to_double(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw FormatError(key, "cannot parse '" + v + "' as a number");
        return d;
    } catch (const std::logic_error &) {
        throw FormatError(key, "cannot parse '" + v + "' as a number");
    }
}

int to_int(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw FormatError(key, "cannot parse '" + v + "' as an integer");
        return i;
    } catch (const std::logic_error &) {
        throw FormatError(key, "cannot parse '" + v + "' as an integer");
    }
}

} // namespace

UromtConfig parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw FormatError("line " + std::to_string(lineno), "expected 'key = value'");
        entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }

    UromtConfig c;
    bool from_preset = false;
    for (const auto &[k, v] : entries)
        if (k == "preset") {
            try {
                c = preset(v);
            } catch (const InvalidArgument &e) {
                throw FormatError("preset", e.what());
            }
            from_preset = true;
        }

    std::map<std::string, bool> seen;
    for (const auto &[k, v] : entries) {
        seen[k] = true;
        if (k == "preset") continue;
        if (k == "n1") c.dims[0] = to_int(k, v);
        else if (k == "n2") c.dims[1] = to_int(k, v);
        else if (k == "n3") c.dims[2] = to_int(k, v);
        else if (k == "q") c.frames = to_int(k, v);
        else if (k == "m") c.steps = to_int(k, v);
        else if (k == "dt") c.dt = to_double(k, v);
        else if (k == "dx") c.spacing[0] = to_double(k, v);
        else if (k == "dy") c.spacing[1] = to_double(k, v);
        else if (k == "dz") c.spacing[2] = to_double(k, v);
        else if (k == "sigma") c.sigma = to_double(k, v);
        else if (k == "alpha") c.alpha = to_double(k, v);
        else if (k == "beta") c.beta = to_double(k, v);
        else if (k == "chi") c.indicator = parse_indicator(v);
        else if (k == "max_outer_iters") c.max_outer_iters = to_int(k, v);
        else if (k == "cg_tol") c.cg_tol = to_double(k, v);
        else if (k == "cg_max_iters") c.cg_max_iters = to_int(k, v);
        else if (k == "ls_max_backtracks") c.ls_max_backtracks = to_int(k, v);
        else if (k == "grad_tol") c.grad_tol = to_double(k, v);
        else if (k == "armijo") c.armijo = parse_bool(k, v);
        else if (k == "armijo_c") c.armijo_c = to_double(k, v);
        else if (k == "reuse_last_interp") c.reuse_last_interp = parse_bool(k, v);
        else if (k == "deterministic") c.deterministic = parse_bool(k, v);
        else throw FormatError(k, "unknown configuration key");
    }

    if (!from_preset) {
        c.preset = "custom";
        for (const char *key : {"n1", "n2", "n3", "q", "m", "dt", "dx", "dy", "dz", "sigma", "alpha", "beta"})
            if (!seen.count(key)) throw FormatError(key, "required key is missing");
    }
    try {
        c.validate();
    } catch (const InvalidArgument &e) {
        const std::string msg = e.what();
        throw FormatError(msg.substr(0, msg.find(':')), msg.substr(msg.find(':') + 2));
    }
    return c;
}

UromtConfig parse_config(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("config", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string format_config(const UromtConfig &c) {
    std::ostringstream os;
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), c.preset) != names.end()) os << "preset = " << c.preset << '\n';
    os << "n1 = " << c.dims[0] << "\nn2 = " << c.dims[1] << "\nn3 = " << c.dims[2] << '\n'
       << "q = " << c.frames << "\nm = " << c.steps << '\n'
       << "dt = " << format_double(c.dt) << '\n'
       << "dx = " << format_double(c.spacing[0]) << "\ndy = " << format_double(c.spacing[1])
       << "\ndz = " << format_double(c.spacing[2]) << '\n'
       << "sigma = " << format_double(c.sigma) << '\n'
       << "alpha = " << format_double(c.alpha) << '\n'
       << "beta = " << format_double(c.beta) << '\n'
       << "chi = " << to_string(c.indicator) << '\n'
       << "max_outer_iters = " << c.max_outer_iters << '\n'
       << "cg_tol = " << format_double(c.cg_tol) << '\n'
       << "cg_max_iters = " << c.cg_max_iters << '\n'
       << "ls_max_backtracks = " << c.ls_max_backtracks << '\n'
       << "grad_tol = " << format_double(c.grad_tol) << '\n'
       << "armijo = " << (c.armijo ? "true" : "false") << '\n'
       << "armijo_c = " << format_double(c.armijo_c) << '\n'
       << "reuse_last_interp = " << (c.reuse_last_interp ? "true" : "false") << '\n'
       << "deterministic = " << (c.deterministic ? "true" : "false") << '\n';
    return os.str();
}

void write_pathlines_csv(const fs::path &path, const std::vector<Pathline> &lines) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << "line_id,step,x,y,z,speed,peclet\n";
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto &p = lines[l];
        for (std::size_t s = 0; s < p.points.size(); ++s)
            os << l << ',' << s << ',' << p.points[s][0] << ',' << p.points[s][1] << ',' << p.points[s][2] << ','
               << p.speed[s] << ',' << p.peclet[s] << '\n';
    }
    write_file_atomic(path, os.str());
}

void write_flux_csv(const fs::path &path, const std::vector<FluxVector> &flux) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << "line_id,seed_x,seed_y,seed_z,dx,dy,dz,length\n";
    for (std::size_t l = 0; l < flux.size(); ++l) {
        const auto &f = flux[l];
        const double len = std::sqrt(f.displacement[0] * f.displacement[0] + f.displacement[1] * f.displacement[1] +
                                     f.displacement[2] * f.displacement[2]);
        os << l << ',' << f.seed[0] << ',' << f.seed[1] << ',' << f.seed[2] << ',' << f.displacement[0] << ','
           << f.displacement[1] << ',' << f.displacement[2] << ',' << len << '\n';
    }
    write_file_atomic(path, os.str());
}

void write_pathlines_vtk(const fs::path &path, const std::vector<Pathline> &lines) {
    std::size_t total = 0;
    for (const auto &p : lines) total += p.points.size();

    // Infinite Peclet values (sigma = 0) are not portable in ASCII VTK.
    const auto finite = [](double v) { return std::isfinite(v) ? v : std::numeric_limits<float>::max(); };

    std::ostringstream os;
    os.precision(9);
    os << "# vtk DataFile Version 3.0\nuromt pathlines\nASCII\nDATASET POLYDATA\n";
    os << "POINTS " << total << " double\n";
    for (const auto &p : lines)
        for (const auto &x : p.points) os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
    os << "LINES " << lines.size() << ' ' << total + lines.size() << '\n';
    std::size_t offset = 0;
    for (const auto &p : lines) {
        os << p.points.size();
        for (std::size_t i = 0; i < p.points.size(); ++i) os << ' ' << offset + i;
        os << '\n';
        offset += p.points.size();
    }
    os << "POINT_DATA " << total << "\nSCALARS speed double 1\nLOOKUP_TABLE default\n";
    for (const auto &p : lines)
        for (double s : p.speed) os << s << '\n';
    os << "SCALARS peclet double 1\nLOOKUP_TABLE default\n";
    for (const auto &p : lines)
        for (double s : p.peclet) os << finite(s) << '\n';
    write_file_atomic(path, os.str());
}

void write_metrics_csv(const fs::path &path, const MetricsReport &report) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << "loop,nmse_percent,pctm_percent,input_total,interpolation_total\n";
    for (std::size_t k = 0; k < report.nmse.size(); ++k)
        os << k + 1 << ',' << report.nmse[k] << ',' << report.pctm[k] << ',' << report.input_totals[k + 1] << ','
           << report.interpolation_totals[k] << '\n';
    write_file_atomic(path, os.str());
}

} // namespace uromt::io
