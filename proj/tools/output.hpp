#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mergectl {

/// Fixed-format number for byte-stable CSV output.
std::string num(double v);

class CsvWriter {
public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

private:
  std::ostream& out_;
};

/// Metadata written next to every CSV: <csv>.meta.json
nlohmann::json metadata(const std::string& command, std::uint64_t config_hash,
                        std::uint64_t master_seed);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

}  // namespace mergectl
