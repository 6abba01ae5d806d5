#include "output.hpp"

#include <cstdio>
#include <fstream>

#include "merge/errors.hpp"
#include "merge/run_config.hpp"

namespace mergectl {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      out_ << ',';
    }
    out_ << fields[i];
  }
  out_ << '\n';
}

nlohmann::json metadata(const std::string& command, std::uint64_t config_hash,
                        std::uint64_t master_seed) {
  return {{"tool", "mergectl"},
          {"version", MERGECTL_VERSION},
          {"command", command},
          {"config_hash", merge::hex(config_hash)},
          {"master_seed", master_seed}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) {
    throw merge::ConfigError("out", "cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return csv.string() + ".meta.json";
}

}  // namespace mergectl
