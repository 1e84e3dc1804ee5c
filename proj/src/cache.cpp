#include "qfdt/cache.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qfdt::cache {

namespace fs = std::filesystem;

std::uint64_t content_hash(const Eigen::MatrixXd& h) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(h.data());
    const std::size_t n = static_cast<std::size_t>(h.size()) * sizeof(double);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ull;
    }
    return hash;
}

fs::path entry_path(const fs::path& dir, std::uint64_t key) {
    std::ostringstream name;
    name << std::hex << std::setw(16) << std::setfill('0') << key << ".qfdt";
    return dir / name.str();
}

bool store(const fs::path& dir, std::uint64_t key, const spectral::EigenSystem& sys) {
    if (sys.identity_vectors) return false;  // nothing worth caching
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return false;
    std::ofstream out(entry_path(dir, key), std::ios::binary | std::ios::trunc);
    if (!out) return false;
    const std::uint64_t dim = static_cast<std::uint64_t>(sys.dim());
    out.write("QFDT", 4);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(sys.energies.data()),
              static_cast<std::streamsize>(dim * sizeof(double)));
    out.write(reinterpret_cast<const char*>(sys.vectors.data()),
              static_cast<std::streamsize>(dim * dim * sizeof(double)));
    return static_cast<bool>(out);
}

std::optional<spectral::EigenSystem> load(const fs::path& dir, std::uint64_t key,
                                          std::string basis_tag) {
    std::ifstream in(entry_path(dir, key), std::ios::binary);
    if (!in) return std::nullopt;
    char magic[4] = {};
    std::uint32_t version = 0;
    std::uint64_t dim = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (!in || std::memcmp(magic, "QFDT", 4) != 0 || version != kVersion || dim == 0) {
        return std::nullopt;
    }
    spectral::EigenSystem sys;
    sys.basis_tag = std::move(basis_tag);
    sys.energies.resize(static_cast<Eigen::Index>(dim));
    sys.vectors.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    in.read(reinterpret_cast<char*>(sys.energies.data()),
            static_cast<std::streamsize>(dim * sizeof(double)));
    in.read(reinterpret_cast<char*>(sys.vectors.data()),
            static_cast<std::streamsize>(dim * dim * sizeof(double)));
    if (!in) return std::nullopt;
    return sys;
}

spectral::EigenSystem diagonalize_cached(const Eigen::MatrixXd& h, std::string basis_tag,
                                         const fs::path& dir) {
    if (dir.empty()) return spectral::diagonalize(h, std::move(basis_tag));
    const std::uint64_t key = content_hash(h);
    if (auto hit = load(dir, key, basis_tag)) return std::move(*hit);
    auto sys = spectral::diagonalize(h, std::move(basis_tag));
    store(dir, key, sys);
    return sys;
}

Stats stats(const fs::path& dir) {
    Stats s;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.path().extension() == ".qfdt") {
            ++s.files;
            s.bytes += entry.file_size(ec);
        }
    }
    return s;
}

std::size_t clear(const fs::path& dir) {
    std::size_t removed = 0;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.path().extension() == ".qfdt") {
            if (fs::remove(entry.path(), ec)) ++removed;
        }
    }
    return removed;
}

}  // namespace qfdt::cache
