#pragma once

#include <filesystem>

#include <krrinf/krr.hpp>

namespace krrinf::cli {

inline constexpr int kModelFormatVersion = 1;

/// Self-describing JSON document holding the kernel, lambda and training data.
/// Loading refits on the stored data, which reproduces the cached model exactly.
void save_model(const std::filesystem::path& path, const KrrFit& fit);
KrrFit load_model(const std::filesystem::path& path);

}  // namespace krrinf::cli
