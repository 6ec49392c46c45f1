#include "diffplan/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "diffplan/error.hpp"

namespace diffplan::app {

std::string_view to_string(Placement p) {
  switch (p) {
    case Placement::kOuter: return "outer";
    case Placement::kInner: return "inner";
    case Placement::kOff: return "off";
  }
  return "outer";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean '" + std::string(value) + "' for " + std::string(key));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{"seed",  "data",  "out",        "episodes",  "T",     "batch",
                                          "beta",  "candidates", "epochs", "max_lr",   "placement", "width",
                                          "heads", "ffn",   "eval_limit", "post_filter_diversity"};
  return k;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "data") data = std::string(value);
  else if (key == "out") out = std::string(value);
  else if (key == "episodes") episodes = parse_number<std::size_t>(key, value);
  else if (key == "T") T = parse_number<int>(key, value);
  else if (key == "batch") batch = parse_number<std::size_t>(key, value);
  else if (key == "beta") beta = parse_number<double>(key, value);
  else if (key == "candidates") candidates = parse_number<std::size_t>(key, value);
  else if (key == "epochs") epochs = parse_number<std::size_t>(key, value);
  else if (key == "max_lr") max_lr = parse_number<double>(key, value);
  else if (key == "placement") {
    if (value == "outer") placement = Placement::kOuter;
    else if (value == "inner") placement = Placement::kInner;
    else if (value == "off") placement = Placement::kOff;
    else throw ConfigError("placement must be outer, inner or off, got '" + std::string(value) + "'");
  } else if (key == "width") width = parse_number<std::size_t>(key, value);
  else if (key == "heads") heads = parse_number<std::size_t>(key, value);
  else if (key == "ffn") ffn = parse_number<std::size_t>(key, value);
  else if (key == "eval_limit") eval_limit = parse_number<std::size_t>(key, value);
  else if (key == "post_filter_diversity") post_filter_diversity = parse_bool(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (T < 1) fail("T must be >= 1");
  if (batch < 2) fail("batch must be >= 2 (the decorrelation loss needs two samples)");
  if (!(beta >= 0.0)) fail("beta must be >= 0");
  if (candidates < 1) fail("candidates must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(max_lr > 0.0)) fail("max_lr must be > 0");
  if (width < 2 || heads < 1 || width % heads != 0) fail("width must be >= 2 and divisible by heads");
  if (ffn < 1) fail("ffn must be >= 1");
  if (episodes < 10) fail("episodes must be >= 10 so every split is nonempty");
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "seed = " << seed << '\n'
     << "data = " << data.string() << '\n'
     << "out = " << out.string() << '\n'
     << "episodes = " << episodes << '\n'
     << "T = " << T << '\n'
     << "batch = " << batch << '\n'
     << "beta = " << format_double(beta) << '\n'
     << "candidates = " << candidates << '\n'
     << "epochs = " << epochs << '\n'
     << "max_lr = " << format_double(max_lr) << '\n'
     << "placement = " << to_string(placement) << '\n'
     << "width = " << width << '\n'
     << "heads = " << heads << '\n'
     << "ffn = " << ffn << '\n'
     << "eval_limit = " << eval_limit << '\n'
     << "post_filter_diversity = " << (post_filter_diversity ? "true" : "false") << '\n';
  return os.str();
}

RunConfig RunConfig::parse(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

RunConfig RunConfig::parse(std::string_view text) { return parse(text, RunConfig{}); }

RunConfig RunConfig::load(const std::filesystem::path& path) { return load(path, RunConfig{}); }

RunConfig RunConfig::load(const std::filesystem::path& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse(ss.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace diffplan::app
