#include "dssm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace dssm::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) out.push_back(trim(part));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<Entry> parse_lines(const std::string& text, const std::string& origin) {
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (!seen.insert(e.key).second) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": key '" + e.key + "' given twice");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

[[noreturn]] void bad_value(const std::string& origin, const Entry& e, const std::string& expected) {
  throw ConfigError(origin + ":" + std::to_string(e.line) + ": key '" + e.key + "' expects " + expected +
                    ", got '" + e.value + "'");
}

double to_double(const std::string& origin, const Entry& e, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || p != end) bad_value(origin, e, "a number");
  return v;
}

double to_double(const std::string& origin, const Entry& e) { return to_double(origin, e, e.value); }

std::uint64_t to_uint(const std::string& origin, const Entry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (e.value.empty() || ec != std::errc() || p != end) bad_value(origin, e, "a non-negative integer");
  return v;
}

std::size_t to_positive(const std::string& origin, const Entry& e) {
  const auto v = to_uint(origin, e);
  if (v == 0) bad_value(origin, e, "a positive integer");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& origin, const Entry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  bad_value(origin, e, "true or false");
}

using Handler = std::function<void(const Entry&)>;

void dispatch(const std::vector<Entry>& entries, const std::map<std::string, Handler>& handlers,
              const std::string& origin, const std::function<bool(const Entry&)>& fallback = {}) {
  for (const Entry& e : entries) {
    auto it = handlers.find(e.key);
    if (it != handlers.end()) {
      it->second(e);
    } else if (!fallback || !fallback(e)) {
      throw ConfigError(origin + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data::IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig rc;
  const auto entries = parse_lines(text, origin);
  const std::string& o = origin;

  auto band = [&](Component c, bool is_min) {
    return [&rc, &o, c, is_min](const Entry& e) {
      const double v = to_double(o, e);
      if (!(v > 0.0)) bad_value(o, e, "a positive number");
      auto& b = rc.model.bands[static_cast<std::size_t>(c)];
      (is_min ? b.min : b.max) = v;
    };
  };
  bool ratio_given = false;

  std::map<std::string, Handler> h{
      {"data_path", [&](const Entry& e) { rc.data_path = e.value; }},
      {"out_dir", [&](const Entry& e) { rc.out_dir = e.value; }},
      {"seed", [&](const Entry& e) { rc.seed = to_uint(o, e); }},
      {"M", [&](const Entry& e) { rc.model.M = to_positive(o, e); rc.explicit_M = true; }},
      {"T", [&](const Entry& e) { rc.model.T = to_positive(o, e); }},
      {"H", [&](const Entry& e) { rc.model.H = to_positive(o, e); }},
      {"D", [&](const Entry& e) { rc.model.D = to_positive(o, e); }},
      {"P", [&](const Entry& e) { rc.model.P = to_positive(o, e); }},
      {"asp_hidden", [&](const Entry& e) { rc.model.asp_hidden = to_positive(o, e); }},
      {"delta_min_trend", band(Component::Trend, true)},
      {"delta_max_trend", band(Component::Trend, false)},
      {"delta_min_seasonal", band(Component::Seasonal, true)},
      {"delta_max_seasonal", band(Component::Seasonal, false)},
      {"delta_min_residual", band(Component::Residual, true)},
      {"delta_max_residual", band(Component::Residual, false)},
      {"eps_norm", [&](const Entry& e) { rc.model.eps_norm = to_double(o, e); if (!(rc.model.eps_norm > 0.0)) bad_value(o, e, "a positive number"); }},
      {"ln_eps", [&](const Entry& e) { rc.model.ln_eps = to_double(o, e); if (!(rc.model.ln_eps > 0.0)) bad_value(o, e, "a positive number"); }},
      {"use_gcrm", [&](const Entry& e) { rc.model.use_gcrm = to_bool(o, e); }},
      {"use_gtssm", [&](const Entry& e) { rc.model.use_gtssm = to_bool(o, e); }},
      {"scan",
       [&](const Entry& e) {
         if (e.value == "parallel") rc.model.scan = ssm::ScanAlgo::Parallel;
         else if (e.value == "sequential") rc.model.scan = ssm::ScanAlgo::Sequential;
         else bad_value(o, e, "parallel or sequential");
       }},
      {"variant",
       [&](const Entry& e) {
         if (e.value == "full") rc.variant = Variant::Full;
         else if (e.value == "no_adl") rc.variant = Variant::NoAdl;
         else if (e.value == "no_gcrm") rc.variant = Variant::NoGcrm;
         else if (e.value == "no_gtssm") rc.variant = Variant::NoGtssm;
         else bad_value(o, e, "full, no_adl, no_gcrm or no_gtssm");
       }},
      {"lambda_rec", [&](const Entry& e) { rc.train.weights.lambda_rec = to_double(o, e); if (!(rc.train.weights.lambda_rec >= 0.0)) bad_value(o, e, "a non-negative number"); }},
      {"lambda_orth", [&](const Entry& e) { rc.train.weights.lambda_orth = to_double(o, e); if (!(rc.train.weights.lambda_orth >= 0.0)) bad_value(o, e, "a non-negative number"); }},
      {"lr", [&](const Entry& e) { rc.train.adam.lr = to_double(o, e); if (!(rc.train.adam.lr >= 0.0)) bad_value(o, e, "a non-negative number"); }},
      {"beta1", [&](const Entry& e) { rc.train.adam.beta1 = to_double(o, e); if (!(rc.train.adam.beta1 >= 0.0 && rc.train.adam.beta1 < 1.0)) bad_value(o, e, "a number in [0, 1)"); }},
      {"beta2", [&](const Entry& e) { rc.train.adam.beta2 = to_double(o, e); if (!(rc.train.adam.beta2 >= 0.0 && rc.train.adam.beta2 < 1.0)) bad_value(o, e, "a number in [0, 1)"); }},
      {"adam_eps", [&](const Entry& e) { rc.train.adam.eps = to_double(o, e); if (!(rc.train.adam.eps > 0.0)) bad_value(o, e, "a positive number"); }},
      {"epochs", [&](const Entry& e) { rc.train.epochs = to_positive(o, e); }},
      {"batch_size", [&](const Entry& e) { rc.train.batch_size = to_positive(o, e); }},
      {"clip_norm", [&](const Entry& e) { rc.train.clip_norm = to_double(o, e); if (!(rc.train.clip_norm >= 0.0)) bad_value(o, e, "a non-negative number"); }},
      {"shuffle", [&](const Entry& e) { rc.train.shuffle = to_bool(o, e); }},
      {"split_train", [&](const Entry& e) { rc.ratios.train = to_double(o, e); ratio_given = true; }},
      {"split_val", [&](const Entry& e) { rc.ratios.val = to_double(o, e); ratio_given = true; }},
      {"split_test", [&](const Entry& e) { rc.ratios.test = to_double(o, e); ratio_given = true; }},
      {"split_train_end", [&](const Entry& e) { rc.split_train_end = to_uint(o, e); }},
      {"split_val_end", [&](const Entry& e) { rc.split_val_end = to_uint(o, e); }},
      {"train_stride", [&](const Entry& e) { rc.windows.train_stride = to_positive(o, e); }},
      {"eval_stride", [&](const Entry& e) { rc.windows.eval_stride = to_positive(o, e); }},
      {"missing_policy",
       [&](const Entry& e) {
         if (e.value == "ffill") rc.missing = data::MissingPolicy::ForwardFill;
         else if (e.value == "error") rc.missing = data::MissingPolicy::Error;
         else bad_value(o, e, "ffill or error");
       }},
  };
  dispatch(entries, h, origin);

  if (rc.split_train_end.has_value() != rc.split_val_end.has_value()) {
    throw ConfigError(origin + ": split_train_end and split_val_end must be given together");
  }
  if (rc.split_train_end && ratio_given) {
    throw ConfigError(origin + ": split ratios and explicit split boundaries are mutually exclusive");
  }
  if (rc.split_train_end && *rc.split_train_end > *rc.split_val_end) {
    throw ConfigError(origin + ": split_train_end exceeds split_val_end");
  }
  const auto& r = rc.ratios;
  if (!(r.train > 0.0 && r.val >= 0.0 && r.test >= 0.0) || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw ConfigError(origin + ": split_train, split_val and split_test must be non-negative, "
                      "with a positive train share, and sum to 1");
  }

  switch (rc.variant) {
    case Variant::Full: break;
    case Variant::NoAdl: rc.train.weights = {0.0, 0.0}; break;
    case Variant::NoGcrm: rc.model.use_gcrm = false; break;
    case Variant::NoGtssm: rc.model.use_gtssm = false; break;
  }
  rc.train.seed = rc.seed;
  rc.windows.T = rc.model.T;
  rc.windows.H = rc.model.H;
  try {
    rc.model.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(origin + ": " + ex.what());
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path), path.string());
}

data::SynthSpec parse_synth_spec(const std::string& text, const std::string& origin) {
  data::SynthSpec spec;
  const auto entries = parse_lines(text, origin);
  const std::string& o = origin;
  std::vector<data::TrendSpec> trend;
  std::vector<data::SeasonSpec> shared;
  bool shared_given = false;
  std::map<std::size_t, std::vector<data::SeasonSpec>> per_var;
  bool M_given = false;

  auto parse_seasons = [&](const Entry& e) {
    std::vector<data::SeasonSpec> out;
    if (e.value.empty() || e.value == "none") return out;
    for (const std::string& item : split(e.value, ',')) {
      const auto f = split(item, ':');
      if (f.size() != 3) bad_value(o, e, "amplitude:period:phase items");
      out.push_back({to_double(o, e, f[0]), to_double(o, e, f[1]), to_double(o, e, f[2])});
    }
    return out;
  };

  std::map<std::string, Handler> h{
      {"N", [&](const Entry& e) { spec.N = to_positive(o, e); }},
      {"M", [&](const Entry& e) { spec.M = to_positive(o, e); M_given = true; }},
      {"noise_std", [&](const Entry& e) { spec.noise_std = to_double(o, e); }},
      {"seed", [&](const Entry& e) { spec.seed = to_uint(o, e); }},
      {"trend",
       [&](const Entry& e) {
         for (const std::string& item : split(e.value, ',')) {
           const auto f = split(item, ':');
           if (f.size() < 2 || f.size() > 3) bad_value(o, e, "slope:intercept[:quad] items");
           data::TrendSpec t{to_double(o, e, f[0]), to_double(o, e, f[1]), 0.0};
           if (f.size() == 3) t.quad = to_double(o, e, f[2]);
           trend.push_back(t);
         }
       }},
      {"seasonal", [&](const Entry& e) { shared = parse_seasons(e); shared_given = true; }},
  };
  dispatch(entries, h, origin, [&](const Entry& e) {
    if (e.key.rfind("seasonal.", 0) != 0) return false;
    const std::string idx = e.key.substr(9);
    std::size_t m = 0;
    auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), m);
    if (idx.empty() || ec != std::errc() || p != idx.data() + idx.size()) return false;
    per_var[m] = parse_seasons(e);
    return true;
  });

  if (!M_given) throw ConfigError(origin + ": missing key 'M'");
  if (spec.N == 0) throw ConfigError(origin + ": missing key 'N'");
  if (trend.empty()) trend.assign(spec.M, {});
  if (trend.size() == 1 && spec.M > 1) trend.assign(spec.M, trend.front());
  if (trend.size() != spec.M) {
    throw ConfigError(origin + ": key 'trend' lists " + std::to_string(trend.size()) + " entries for M = " +
                      std::to_string(spec.M));
  }
  spec.trend = trend;
  spec.seasonal.assign(spec.M, shared_given ? shared : std::vector<data::SeasonSpec>{});
  for (const auto& [m, list] : per_var) {
    if (m >= spec.M) {
      throw ConfigError(origin + ": key 'seasonal." + std::to_string(m) + "' is out of range for M = " +
                        std::to_string(spec.M));
    }
    spec.seasonal[m] = list;
  }
  try {
    spec.validate();
  } catch (const data::DataError& ex) {
    throw ConfigError(origin + ": " + ex.what());
  }
  return spec;
}

data::SynthSpec load_synth_spec(const std::filesystem::path& path) {
  return parse_synth_spec(read_text_file(path), path.string());
}

}  // namespace dssm::cli
