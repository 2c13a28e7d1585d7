#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace uromt {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(const Eigen::VectorXd &values);
std::string sha256_file(const std::filesystem::path &path);

} // namespace uromt
