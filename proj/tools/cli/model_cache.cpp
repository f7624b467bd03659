#include "model_cache.hpp"

#include <fstream>

#include <json.hpp>

#include "cli_errors.hpp"

namespace krrinf::cli {

using nlohmann::json;

void save_model(const std::filesystem::path& path, const KrrFit& fit) {
  const Dataset& data = fit.data();
  json doc;
  doc["format"] = "krrinf-model";
  doc["format_version"] = kModelFormatVersion;
  doc["kernel"] = {{"family", "matern"}, {"nu", fit.kernel().nu()}, {"phi", fit.kernel().phi()}};
  doc["lambda"] = fit.lambda();
  doc["n"] = data.size();
  doc["d"] = data.dim();
  json X = json::array();
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < data.dim(); ++k) row.push_back(data.X(i, k));
    X.push_back(std::move(row));
  }
  doc["X"] = std::move(X);
  doc["Y"] = std::vector<double>(data.Y.data(), data.Y.data() + data.Y.size());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model cache " + path.string());
  out << doc.dump(1) << '\n';
}

KrrFit load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model cache " + path.string());
  json doc;
  try {
    doc = json::parse(in);
    if (doc.at("format").get<std::string>() != "krrinf-model") {
      throw DataError(path.string() + ": not a krrinf model cache");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError(path.string() + ": unsupported model format_version " + std::to_string(version));
    }
    const auto n = doc.at("n").get<Eigen::Index>();
    const auto d = doc.at("d").get<Eigen::Index>();
    const json& X = doc.at("X");
    const json& Y = doc.at("Y");
    if (static_cast<Eigen::Index>(X.size()) != n || static_cast<Eigen::Index>(Y.size()) != n) {
      throw DataError(path.string() + ": model cache has inconsistent sizes");
    }
    Dataset data{Design(n, d), Vector(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& row = X.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != d) {
        throw DataError(path.string() + ": model cache row " + std::to_string(i) + " has wrong length");
      }
      for (Eigen::Index k = 0; k < d; ++k) data.X(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
      data.Y[i] = Y.at(static_cast<std::size_t>(i)).get<double>();
    }
    const json& kernel = doc.at("kernel");
    MaternKernel k(kernel.at("nu").get<double>(), kernel.at("phi").get<double>(), static_cast<int>(d));
    return fit(std::move(data), k, doc.at("lambda").get<double>());
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed model cache (" + e.what() + ")");
  }
}

}  // namespace krrinf::cli
