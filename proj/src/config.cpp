#include "mmfnd/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mmfnd/error.hpp"

namespace mmfnd {

using nlohmann::json;

namespace {

constexpr EncoderRole kRoles[] = {EncoderRole::text_indic,  EncoderRole::text_english, EncoderRole::image_patch,
                                  EncoderRole::image_conv,  EncoderRole::multimodal,   EncoderRole::caption_gen,
                                  EncoderRole::caption_text};

json scalar_to_json(const YAML::Node& node) {
  const auto& s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  long long i = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ec == std::errc() && p == s.data() + s.size()) return i;
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (end == s.c_str() + s.size()) return d;
  return s;
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      json j = json::object();
      for (const auto& kv : node) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      json j = json::array();
      for (const auto& item : node) j.push_back(yaml_to_json(item));
      return j;
    }
    case YAML::NodeType::Scalar: return scalar_to_json(node);
    default: return nullptr;
  }
}

std::string expect_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError("config field '" + field + "' must be a string");
  return j.get<std::string>();
}

int expect_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError("config field '" + field + "' must be an integer");
  return j.get<int>();
}

RunPaths paths_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config field 'paths' must be a mapping");
  RunPaths p;
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) continue;
    const std::filesystem::path path = expect_string(value, "paths." + key);
    if (key == "manifest") p.manifest = path;
    else if (key == "image_root") p.image_root = path;
    else if (key == "cache_dir") p.cache_dir = path;
    else if (key == "output_dir") p.output_dir = path;
    else throw ConfigError("unknown config field 'paths." + key + "'");
  }
  return p;
}

}  // namespace

RunConfig::RunConfig() {
  for (auto role : kRoles) backends[role] = std::string(kStubBackend);
}

void RunConfig::validate() const {
  if (schema_version != kRunConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + std::to_string(schema_version));
  }
  train.validate();
  if (max_tokens < 2) throw ConfigError("max_tokens must be >= 2, got " + std::to_string(max_tokens));
  for (auto role : kRoles) {
    auto it = backends.find(role);
    if (it == backends.end() || it->second.empty()) {
      throw ConfigError("no backend assigned for role '" + std::string(to_string(role)) + "'");
    }
  }
  if (report_formats.empty()) throw ConfigError("report_formats must not be empty");
}

RunConfig parse_run_config(std::string_view yaml_text) {
  json doc;
  try {
    doc = yaml_to_json(YAML::Load(std::string(yaml_text)));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig c;
  if (doc.is_null()) return c;
  if (!doc.is_object()) throw ConfigError("config must be a mapping");
  for (const auto& [key, value] : doc.items()) {
    if (key == "schema_version") {
      c.schema_version = expect_int(value, key);
    } else if (key == "train") {
      c.train = train_config_from_json(value);
    } else if (key == "backends") {
      if (!value.is_object()) throw ConfigError("config field 'backends' must be a mapping");
      for (const auto& [role, name] : value.items()) {
        EncoderRole r;
        try {
          r = parse_encoder_role(role);
        } catch (const Error&) {
          throw ConfigError("unknown encoder role 'backends." + role + "'");
        }
        c.backends[r] = expect_string(name, "backends." + role);
      }
    } else if (key == "stub_dims") {
      if (!value.is_object()) throw ConfigError("config field 'stub_dims' must be a mapping");
      for (const auto& [role, dim] : value.items()) {
        const int d = expect_int(dim, "stub_dims." + role);
        if (role == "text_indic") c.stub_dims.text_indic = d;
        else if (role == "text_english") c.stub_dims.text_english = d;
        else if (role == "image_conv") c.stub_dims.image_conv = d;
        else if (role == "image_patch") c.stub_dims.image_patch = d;
        else if (role == "multimodal") c.stub_dims.multimodal = d;
        else if (role == "caption_text") c.stub_dims.caption_text = d;
        else throw ConfigError("unknown config field 'stub_dims." + role + "'");
      }
    } else if (key == "max_tokens") {
      c.max_tokens = expect_int(value, key);
    } else if (key == "paths") {
      c.paths = paths_from_json(value);
    } else if (key == "translator") {
      c.translator = expect_string(value, key);
    } else if (key == "report_formats") {
      if (!value.is_array()) throw ConfigError("config field 'report_formats' must be a list");
      std::string joined;
      for (const auto& f : value) joined += expect_string(f, "report_formats") + ",";
      c.report_formats = parse_formats(joined);
    } else {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  json backends = json::object();
  for (const auto& [role, name] : c.backends) backends[std::string(to_string(role))] = name;
  json formats = json::array();
  for (auto f : c.report_formats) {
    formats.push_back(f == ReportFormat::json ? "json" : f == ReportFormat::csv ? "csv" : "plots");
  }
  auto opt = [](const std::optional<std::filesystem::path>& p) -> json {
    return p ? json(p->string()) : json(nullptr);
  };
  return {{"schema_version", c.schema_version},
          {"train", to_json(c.train)},
          {"backends", backends},
          {"max_tokens", c.max_tokens},
          {"paths",
           {{"manifest", opt(c.paths.manifest)},
            {"image_root", opt(c.paths.image_root)},
            {"cache_dir", opt(c.paths.cache_dir)},
            {"output_dir", opt(c.paths.output_dir)}}},
          {"translator", c.translator},
          {"report_formats", formats}};
}

BackendSet make_backends(const RunConfig& config) {
  config.validate();
  for (const auto& [role, name] : config.backends) {
    if (name != kStubBackend) {
      throw ConfigError("backend '" + name + "' for role '" + std::string(to_string(role)) +
                        "' is not available in this build (available: stub)");
    }
  }
  return make_stub_backends(config.stub_dims);
}

std::unique_ptr<Translator> make_translator(std::string_view spec) {
  if (spec == "identity") return std::make_unique<IdentityTranslator>();
  constexpr std::string_view kLookup = "lookup:";
  if (spec.substr(0, kLookup.size()) == kLookup) {
    return std::make_unique<LookupTranslator>(LookupTranslator::from_file(std::string(spec.substr(kLookup.size()))));
  }
  throw ConfigError("unknown translator '" + std::string(spec) + "' (expected identity or lookup:<file>)");
}

}  // namespace mmfnd
