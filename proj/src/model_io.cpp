#include "latspec/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace latspec {

namespace {

using nlohmann::json;

int line_of(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + int(std::count(text.begin(), text.begin() + std::ptrdiff_t(offset), '\n'));
}

// Start line of every object inside the top-level arrays, keyed by array name.
std::map<std::string, std::vector<int>> entry_lines(const std::string& text) {
  std::map<std::string, std::vector<int>> out;
  std::vector<char> stack;
  std::string last_string, array_key;
  bool in_string = false, escaped = false;
  std::string current;
  int line = 1;
  for (char ch : text) {
    if (ch == '\n') ++line;
    if (in_string) {
      if (escaped) escaped = false;
      else if (ch == '\\') escaped = true;
      else if (ch == '"') in_string = false, last_string = current;
      else current += ch;
      continue;
    }
    switch (ch) {
      case '"': in_string = true, current.clear(); break;
      case '[':
        if (stack.size() == 1) array_key = last_string;
        stack.push_back(ch);
        break;
      case '{':
        if (stack.size() == 2 && stack[1] == '[') out[array_key].push_back(line);
        stack.push_back(ch);
        break;
      case ']':
      case '}':
        if (!stack.empty()) stack.pop_back();
        break;
      default: break;
    }
  }
  return out;
}

struct Context {
  const std::string& source;
  const std::map<std::string, std::vector<int>>& lines;

  [[noreturn]] void fail(const std::string& key, std::size_t index, const std::string& message) const {
    std::ostringstream msg;
    msg << source;
    const auto it = lines.find(key);
    if (it != lines.end() && index < it->second.size()) msg << ":" << it->second[index];
    msg << ": " << key << "[" << index << "]: " << message;
    throw ModelValidationError(msg.str());
  }
};

Site read_site(const json& entry, const Context& ctx, const std::string& key, std::size_t i) {
  if (!entry.contains("s") || !entry["s"].is_array() || entry["s"].size() != 3)
    ctx.fail(key, i, "\"s\" must be an array of three integers");
  Site s{};
  for (std::size_t a = 0; a < 3; ++a) {
    const json& x = entry["s"][a];
    if (!x.is_number_integer()) ctx.fail(key, i, "\"s\" must be an array of three integers");
    s[a] = x.get<int>();
  }
  return s;
}

double read_number(const json& entry, const char* field, const Context& ctx, const std::string& key, std::size_t i,
                   std::optional<double> fallback = std::nullopt) {
  if (!entry.contains(field)) {
    if (fallback) return *fallback;
    ctx.fail(key, i, std::string("missing \"") + field + "\"");
  }
  if (!entry[field].is_number()) ctx.fail(key, i, std::string("\"") + field + "\" must be a number");
  return entry[field].get<double>();
}

HoppingCoefficients read_hopping(const json& root, const std::string& key, const Context& ctx) {
  if (!root[key].is_array()) ctx.fail(key, 0, "must be an array");
  HoppingCoefficients h;
  for (std::size_t i = 0; i < root[key].size(); ++i) {
    const json& e = root[key][i];
    if (!e.is_object()) ctx.fail(key, i, "entry must be an object");
    const Site s = read_site(e, ctx, key, i);
    if (h.contains(s)) ctx.fail(key, i, "duplicate site");
    h.set(s, Complex(read_number(e, "re", ctx, key, i), read_number(e, "im", ctx, key, i, 0.0)));
  }
  h.fill_conjugates();
  const double defect = h.hermiticity_defect();
  if (defect > 1e-12 * std::max(1.0, h.l1_norm())) {
    std::ostringstream msg;
    msg << ctx.source << ": " << key << ": listed coefficients violate hopping(-s) = conj(hopping(s)), defect "
        << defect;
    throw ModelValidationError(msg.str());
  }
  return h;
}

}  // namespace

ModelFile parse_model(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << line_of(text, e.byte == 0 ? 0 : e.byte - 1) << ": JSON syntax error: " << e.what();
    throw ModelValidationError(msg.str());
  }
  if (!root.is_object()) throw ModelValidationError(source + ":1: top level must be an object");
  const auto lines = entry_lines(text);
  const Context ctx{source, lines};
  for (const auto& [key, value] : root.items())
    if (key != "hopping" && key != "hopping2" && key != "potential")
      throw ModelValidationError(source + ": unknown field \"" + key + "\"");
  if (!root.contains("hopping")) throw ModelValidationError(source + ": missing \"hopping\"");

  ModelFile m;
  m.hopping = read_hopping(root, "hopping", ctx);
  if (root.contains("hopping2")) m.hopping2 = read_hopping(root, "hopping2", ctx);
  if (root.contains("potential")) {
    if (!root["potential"].is_array()) ctx.fail("potential", 0, "must be an array");
    for (std::size_t i = 0; i < root["potential"].size(); ++i) {
      const json& e = root["potential"][i];
      if (!e.is_object()) ctx.fail("potential", i, "entry must be an object");
      const Site s = read_site(e, ctx, "potential", i);
      if (m.potential.contains(s)) ctx.fail("potential", i, "duplicate site");
      if (e.contains("im") && e["im"].is_number() && e["im"].get<double>() != 0.0)
        ctx.fail("potential", i, "potential coefficients must be real");
      m.potential.set(s, read_number(e, "value", ctx, "potential", i));
    }
  }
  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelValidationError(path + ": cannot open model file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str(), path);
}

std::string serialize_model(const ModelFile& model) {
  auto hopping = [](const HoppingCoefficients& h) {
    json out = json::array();
    for (const auto& [s, v] : h.entries()) out.push_back({{"s", s}, {"re", v.real()}, {"im", v.imag()}});
    return out;
  };
  json root{{"hopping", hopping(model.hopping)}};
  if (model.hopping2) root["hopping2"] = hopping(*model.hopping2);
  json potential = json::array();
  for (const auto& [s, v] : model.potential.entries()) potential.push_back({{"s", s}, {"value", v.real()}});
  root["potential"] = potential;
  return root.dump(2) + "\n";
}

OneParticleModel to_one_particle(const ModelFile& model) {
  return OneParticleModel(DispersionRelation(model.hopping), model.potential);
}

TwoParticleModel to_two_particle(const ModelFile& model) {
  return TwoParticleModel(DispersionRelation(model.hopping), DispersionRelation(model.hopping2.value_or(model.hopping)),
                          model.potential);
}

}  // namespace latspec
