#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "hyperfusion/ablation.hpp"
#include "hyperfusion/ensemble.hpp"
#include "hyperfusion/semisup.hpp"
#include "hyperfusion/synthgen.hpp"

namespace hyperfusion {

// Flat sectioned key-value config: `[section]` headers, `key = value`
// lines, '#' comments. One config drives a whole run so manifests fully
// reproduce experiments.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& section,
                             const std::string& key) const;

  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  double get_real(const std::string& section, const std::string& key,
                  double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;

  // FNV-1a 64 over the raw config bytes, as fixed-width hex.
  std::string content_hash() const;
  const std::string& raw() const { return raw_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  std::string raw_;
};

// Typed views over the config sections.
SynthConfig synth_config_from(const ConfigFile& cfg);
FeatureConfig feature_config_from(const ConfigFile& cfg);
EnsembleConfig ensemble_config_from(const ConfigFile& cfg);
PseudoLabelConfig pseudo_config_from(const ConfigFile& cfg);

}  // namespace hyperfusion
