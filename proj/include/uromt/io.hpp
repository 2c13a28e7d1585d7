#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uromt/analysis.hpp"
#include "uromt/grid.hpp"
#include "uromt/solver.hpp"

namespace uromt::io {

namespace fs = std::filesystem;

enum class DType { Float64, Float32, UInt8 };

std::string to_string(DType t);
std::size_t dtype_size(DType t);

/// Text sidecar of a raw volume. On disk:
///
///     uromt-volume 1
///     dims: 50 50 50
///     spacing: 1 1 1
///     components: 1
///     dtype: float64
///     axis_order: xyz
///     endianness: little
///     data_file: image_00.raw
///
/// The payload holds dims product * components values, component-major (all
/// x components, then all y, then all z for vector fields), x fastest.
struct VolumeHeader {
    Index3 dims{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int components = 1;
    DType dtype = DType::Float64;
    std::string axis_order = "xyz";
    std::string endianness = "little";
    std::string data_file;
};

struct Volume {
    Grid grid;
    int components = 1;
    Vector values;
};

/// Writes `header_path` and its payload (same stem, ".raw") atomically.
void write_volume(const fs::path &header_path, const Grid &grid, const Vector &values, int components = 1,
                  DType dtype = DType::Float64);

VolumeHeader read_volume_header(const fs::path &header_path);

/// Throws FormatError naming the offending header field, or "payload" for a
/// truncated or oversized data file.
Volume read_volume(const fs::path &header_path);

/// Replaces `path` with `content` via a temporary file and rename.
void write_file_atomic(const fs::path &path, std::string_view content);

std::vector<std::string> preset_names();

/// Parameter sets of the published experiments: "gauss-test-1", "gauss-test-2",
/// "rat-brain". Throws InvalidArgument for unknown names.
UromtConfig preset(std::string_view name);

/// `key = value` lines, `#` comments. A `preset = name` line seeds every value
/// from that preset; otherwise n1 n2 n3 q m dt dx dy dz sigma alpha beta are all
/// required. Throws FormatError naming the key.
UromtConfig parse_config_text(std::string_view text);
UromtConfig parse_config(const fs::path &path);

/// Inverse of parse_config_text (every key written explicitly).
std::string format_config(const UromtConfig &config);

void write_pathlines_csv(const fs::path &path, const std::vector<Pathline> &lines);
void write_flux_csv(const fs::path &path, const std::vector<FluxVector> &flux);
/// Legacy ASCII VTK polydata with speed and peclet point scalars.
void write_pathlines_vtk(const fs::path &path, const std::vector<Pathline> &lines);
void write_metrics_csv(const fs::path &path, const MetricsReport &report);

} // namespace uromt::io
