/*
 * Copyright (c) 2026 The VSA Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vsa/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace vsa {

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw std::invalid_argument("config key '" + key + "': '" + value + "' is not " + expected);
}

std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_value(key, s, "a non-negative integer");
  return v;
}

double parse_double(const std::string& key, const std::string& s) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (in.fail() || !in.eof()) bad_value(key, s, "a number");
  return v;
}

void add_model_size(std::vector<Field>& out, const std::string& key, std::size_t VsaConfig::*member) {
  out.push_back({"model", key, [member](const RunConfig& c) { return std::to_string(c.model.*member); },
                 [member, key](RunConfig& c, const std::string& v) {
                   c.model.*member = static_cast<std::size_t>(parse_uint(key, v));
                 }});
}

void add_optim(std::vector<Field>& out, const std::string& section, OptimConfig RunConfig::*which) {
  auto real = [&](const std::string& key, double OptimConfig::*m) {
    out.push_back({section, key, [which, m](const RunConfig& c) { return fmt_double(c.*which.*m); },
                   [which, m, key](RunConfig& c, const std::string& v) { c.*which.*m = parse_double(key, v); }});
  };
  auto count = [&](const std::string& key, std::size_t OptimConfig::*m) {
    out.push_back({section, key, [which, m](const RunConfig& c) { return std::to_string(c.*which.*m); },
                   [which, m, key](RunConfig& c, const std::string& v) {
                     c.*which.*m = static_cast<std::size_t>(parse_uint(key, v));
                   }});
  };
  real("base_lr", &OptimConfig::base_lr);
  real("weight_decay", &OptimConfig::weight_decay);
  real("beta1", &OptimConfig::beta1);
  real("beta2", &OptimConfig::beta2);
  real("eps", &OptimConfig::eps);
  count("batch_size", &OptimConfig::batch_size);
  count("warmup_epochs", &OptimConfig::warmup_epochs);
  count("total_epochs", &OptimConfig::total_epochs);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    for (auto [key, member] : std::initializer_list<std::pair<const char*, std::size_t VsaConfig::*>>{
             {"image_size", &VsaConfig::image_size},
             {"patch_size", &VsaConfig::patch_size},
             {"channels", &VsaConfig::channels},
             {"enc_dim", &VsaConfig::enc_dim},
             {"enc_depth", &VsaConfig::enc_depth},
             {"enc_heads", &VsaConfig::enc_heads},
             {"dec_dim", &VsaConfig::dec_dim},
             {"dec_depth", &VsaConfig::dec_depth},
             {"dec_cross", &VsaConfig::dec_cross},
             {"dec_heads", &VsaConfig::dec_heads},
             {"n_views", &VsaConfig::n_views},
             {"num_source_views", &VsaConfig::num_source_views}}) {
      add_model_size(f, key, member);
    }
    f.push_back({"model", "mask_ratio", [](const RunConfig& c) { return fmt_double(c.model.mask_ratio); },
                 [](RunConfig& c, const std::string& v) { c.model.mask_ratio = parse_double("mask_ratio", v); }});
    f.push_back({"model", "pose_mode", [](const RunConfig& c) { return std::string(to_string(c.model.pose_mode)); },
                 [](RunConfig& c, const std::string& v) { c.model.pose_mode = parse_pose_mode(v); }});
    add_optim(f, "pretrain", &RunConfig::pretrain);
    add_optim(f, "finetune", &RunConfig::finetune);
    add_optim(f, "probe", &RunConfig::probe);
    f.push_back({"data", "train_data", [](const RunConfig& c) { return c.train_data; },
                 [](RunConfig& c, const std::string& v) { c.train_data = v; }});
    f.push_back({"data", "test_data", [](const RunConfig& c) { return c.test_data; },
                 [](RunConfig& c, const std::string& v) { c.test_data = v; }});
    f.push_back({"data", "sampler", [](const RunConfig& c) { return std::string(to_string(c.sampler)); },
                 [](RunConfig& c, const std::string& v) { c.sampler = parse_sampler(v); }});
    f.push_back({"data", "augment", [](const RunConfig& c) { return to_string(c.augment); },
                 [](RunConfig& c, const std::string& v) { c.augment = parse_augment_policy(v); }});
    f.push_back({"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); }});
    f.push_back({"run", "precision", [](const RunConfig& c) { return std::string(to_string(c.precision)); },
                 [](RunConfig& c, const std::string& v) { c.precision = parse_precision(v); }});
    f.push_back({"run", "out_dir", [](const RunConfig& c) { return c.out_dir; },
                 [](RunConfig& c, const std::string& v) { c.out_dir = v; }});
    auto run_count = [&f](const char* key, std::size_t RunConfig::*m) {
      f.push_back({"run", key, [m](const RunConfig& c) { return std::to_string(c.*m); },
                   [m, key](RunConfig& c, const std::string& v) {
                     c.*m = static_cast<std::size_t>(parse_uint(key, v));
                   }});
    };
    run_count("checkpoint_every", &RunConfig::checkpoint_every);
    run_count("probe_views", &RunConfig::probe_views);
    run_count("workers", &RunConfig::workers);
    return f;
  }();
  return table;
}

const Field& find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) return f;
  }
  throw std::invalid_argument("unknown config key '" + section + "." + key + "'");
}

}  // namespace

std::string_view to_string(Precision p) { return p == Precision::fp32 ? "fp32" : "fp64"; }

Precision parse_precision(std::string_view text) {
  if (text == "fp32") return Precision::fp32;
  if (text == "fp64") return Precision::fp64;
  throw std::invalid_argument("unknown precision '" + std::string(text) + "' (expected fp32 or fp64)");
}

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.section + "." + f.key);
  return keys;
}

std::string serialize_run_config(const RunConfig& config) {
  boost::property_tree::ptree tree;
  for (const auto& f : fields()) tree.put(boost::property_tree::ptree::path_type(f.section + "." + f.key, '.'), f.get(config));
  std::ostringstream out;
  boost::property_tree::write_ini(out, tree);
  return out.str();
}

RunConfig parse_run_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  RunConfig config;
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) throw std::invalid_argument("config key '" + section + "' must live inside a section");
    for (const auto& [key, value] : entries) find_field(section, key).set(config, value.data());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return parse_run_config(std::string_view(bytes.data(), bytes.size()));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  const auto text = serialize_run_config(config);
  io::write_file(path, std::vector<char>(text.begin(), text.end()));
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw std::invalid_argument("override '" + std::string(assignment) + "' is not of the form section.key=value");
  }
  const std::string section(assignment.substr(0, dot));
  const std::string key(assignment.substr(dot + 1, eq - dot - 1));
  find_field(section, key).set(config, std::string(assignment.substr(eq + 1)));
}

}  // namespace vsa
