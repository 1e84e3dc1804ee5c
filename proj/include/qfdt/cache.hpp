// cache.hpp — optional on-disk eigensystem cache, keyed by a content hash of
// the Hamiltonian bytes. File layout (little endian):
//   magic "QFDT" | version u32 | dimension u64 | energies f64[dim]
//   | vectors f64[dim*dim] column-major

#pragma once

#include "qfdt/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace qfdt::cache {

inline constexpr std::uint32_t kVersion = 1;

// FNV-1a over the raw double bytes of a dense symmetric matrix.
std::uint64_t content_hash(const Eigen::MatrixXd& h);

std::filesystem::path entry_path(const std::filesystem::path& dir, std::uint64_t key);

bool store(const std::filesystem::path& dir, std::uint64_t key,
           const spectral::EigenSystem& sys);

std::optional<spectral::EigenSystem> load(const std::filesystem::path& dir,
                                          std::uint64_t key, std::string basis_tag);

// Diagonalize with read-through caching; falls back to plain diagonalization
// when dir is empty.
spectral::EigenSystem diagonalize_cached(const Eigen::MatrixXd& h, std::string basis_tag,
                                         const std::filesystem::path& dir);

struct Stats {
    std::size_t files = 0;
    std::uintmax_t bytes = 0;
};

Stats stats(const std::filesystem::path& dir);
std::size_t clear(const std::filesystem::path& dir);

}  // namespace qfdt::cache
