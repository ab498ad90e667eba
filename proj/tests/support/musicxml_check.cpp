#include "musicxml_check.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace jianpu::testkit {

namespace pt = boost::property_tree;
using nlohmann::json;

namespace {

bool is_integer(const std::string& s, bool positive) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (std::size_t k = i; k < s.size(); ++k) {
    if (s[k] < '0' || s[k] > '9') return false;
  }
  if (positive) return s[0] != '-' && std::stoll(s) > 0;
  return true;
}

std::optional<std::string> check_text(const std::string& value, const json& rule) {
  if (rule.is_string()) {
    const std::string kind = rule;
    if (kind == "string") return std::nullopt;
    if (kind == "integer" && is_integer(value, false)) return std::nullopt;
    if (kind == "positive-integer" && is_integer(value, true)) return std::nullopt;
    return "'" + value + "' is not " + kind;
  }
  if (rule.contains("enum")) {
    for (const auto& e : rule.at("enum")) {
      if (e.get<std::string>() == value) return std::nullopt;
    }
    return "'" + value + "' not in enumeration";
  }
  if (rule.contains("range")) {
    if (!is_integer(value, false)) return "'" + value + "' is not an integer";
    const long long v = std::stoll(value);
    if (v < rule.at("range")[0].get<long long>() || v > rule.at("range")[1].get<long long>()) {
      return "'" + value + "' out of range";
    }
    return std::nullopt;
  }
  return "unknown text rule";
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

class Validator {
 public:
  explicit Validator(const json& schema) : elements_(schema.at("elements")) {}

  void element(const std::string& name, const pt::ptree& node, const std::string& path) {
    if (!elements_.contains(name)) {
      errors_.push_back(path + ": element not in schema");
      return;
    }
    const json& rule = elements_.at(name);
    attributes(rule, node, path);

    std::vector<std::pair<std::string, const pt::ptree*>> children;
    for (const auto& [child, sub] : node) {
      if (child == "<xmlattr>" || child == "<xmlcomment>") continue;
      children.emplace_back(child, &sub);
    }
    const std::string text = trimmed(node.data());
    if (rule.value("empty", false)) {
      if (!children.empty() || !text.empty()) errors_.push_back(path + ": must be empty");
      return;
    }
    if (rule.contains("text")) {
      if (!children.empty()) errors_.push_back(path + ": text element has children");
      if (auto msg = check_text(text, rule.at("text"))) errors_.push_back(path + ": " + *msg);
      return;
    }
    if (!text.empty()) errors_.push_back(path + ": unexpected text '" + text + "'");
    sequence(rule.value("sequence", json::array()), children, path);
  }

  std::vector<std::string> errors_;

 private:
  void attributes(const json& rule, const pt::ptree& node, const std::string& path) {
    const json attrs = rule.value("attributes", json::object());
    std::set<std::string> seen;
    if (const auto a = node.get_child_optional("<xmlattr>")) {
      for (const auto& [attr, val] : *a) {
        seen.insert(attr);
        if (!attrs.contains(attr)) {
          errors_.push_back(path + "/@" + attr + ": attribute not in schema");
          continue;
        }
        const json& ar = attrs.at(attr);
        if (ar.contains("enum")) {
          if (auto msg = check_text(val.data(), json{{"enum", ar.at("enum")}})) errors_.push_back(path + "/@" + attr + ": " + *msg);
        }
        if (ar.contains("text")) {
          if (auto msg = check_text(val.data(), ar.at("text"))) errors_.push_back(path + "/@" + attr + ": " + *msg);
        }
      }
    }
    for (const auto& [attr, ar] : attrs.items()) {
      if (ar.value("required", false) && !seen.count(attr)) errors_.push_back(path + ": missing attribute " + attr);
    }
  }

  void sequence(const json& particles, const std::vector<std::pair<std::string, const pt::ptree*>>& children,
                const std::string& path) {
    std::size_t c = 0;
    for (const auto& p : particles) {
      std::set<std::string> names;
      for (const auto& n : p.at("names")) names.insert(n.get<std::string>());
      const int min = p.at("min");
      const long long max = p.at("max").is_null() ? -1 : p.at("max").get<long long>();
      long long count = 0;
      while (c < children.size() && names.count(children[c].first) && (max < 0 || count < max)) {
        element(children[c].first, *children[c].second, path + "/" + children[c].first + "[" + std::to_string(c) + "]");
        ++c;
        ++count;
      }
      if (count < min) errors_.push_back(path + ": expected " + *names.begin() + " at child " + std::to_string(c));
    }
    if (c < children.size()) errors_.push_back(path + ": unexpected child " + children[c].first);
  }

  const json& elements_;
};

pt::ptree parse(const std::string& xml) {
  std::istringstream in(xml);
  pt::ptree tree;
  pt::read_xml(in, tree);
  return tree;
}

}  // namespace

json load_musicxml_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema " + path.string());
  return json::parse(in);
}

std::vector<std::string> validate_musicxml(const std::string& xml, const json& schema) {
  pt::ptree tree;
  try {
    tree = parse(xml);
  } catch (const pt::xml_parser_error& e) {
    return {std::string("not well-formed: ") + e.what()};
  }
  const std::string root = schema.at("root");
  std::vector<std::string> tops;
  for (const auto& [name, sub] : tree) {
    if (name != "<xmlcomment>") tops.push_back(name);
  }
  if (tops.size() != 1 || tops[0] != root) return {"root element must be " + root};

  Validator v(schema);
  const pt::ptree& doc = tree.get_child(root);
  v.element(root, doc, "/" + root);

  std::set<std::string> declared;
  if (const auto pl = doc.get_child_optional("part-list")) {
    for (const auto& [name, sp] : *pl) {
      if (name == "score-part") declared.insert(sp.get<std::string>("<xmlattr>.id", ""));
    }
  }
  for (const auto& [name, part] : doc) {
    if (name != "part") continue;
    const std::string id = part.get<std::string>("<xmlattr>.id", "");
    if (!declared.count(id)) v.errors_.push_back("part " + id + " not declared in part-list");
    int expected = 1;
    for (const auto& [mname, m] : part) {
      if (mname != "measure") continue;
      if (m.get<std::string>("<xmlattr>.number", "") != std::to_string(expected)) {
        v.errors_.push_back("measure numbers must count up from 1 (at " + std::to_string(expected) + ")");
      }
      ++expected;
    }
  }
  return v.errors_;
}

int XmlNote::midi_key() const {
  static const std::string steps = "CDEFGAB";
  static constexpr int kOffset[] = {0, 2, 4, 5, 7, 9, 11};
  return kOffset[steps.find(step)] + alter + 12 * (octave + 1);
}

XmlScore read_musicxml(const std::string& xml) {
  const pt::ptree tree = parse(xml);
  XmlScore out;
  const pt::ptree& part = tree.get_child("score-partwise.part");
  for (const auto& [mname, m] : part) {
    if (mname != "measure") continue;
    ++out.measures;
    if (const auto d = m.get_optional<int>("attributes.divisions")) out.divisions = *d;
    for (const auto& [nname, n] : m) {
      if (nname != "note") continue;
      XmlNote note;
      note.measure = out.measures;
      note.rest = n.get_child_optional("rest").has_value();
      if (!note.rest) {
        note.step = n.get<std::string>("pitch.step").at(0);
        note.alter = n.get<int>("pitch.alter", 0);
        note.octave = n.get<int>("pitch.octave");
      }
      note.duration = n.get<long long>("duration");
      for (const auto& [cname, c] : n) {
        if (cname == "tie") {
          const auto type = c.get<std::string>("<xmlattr>.type");
          (type == "start" ? note.tie_start : note.tie_stop) = true;
        }
        if (cname == "notations") {
          for (const auto& [sname, s] : c) {
            if (sname != "slur") continue;
            const auto type = s.get<std::string>("<xmlattr>.type");
            (type == "start" ? note.slur_start : note.slur_stop) = true;
          }
        }
        if (cname == "lyric") note.lyric = c.get<std::string>("text");
      }
      out.notes.push_back(note);
    }
  }
  return out;
}

}  // namespace jianpu::testkit
