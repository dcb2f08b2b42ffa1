#include "uiwf/labels.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "uiwf/error.hpp"

namespace uiwf {

namespace {

constexpr char kSep = '\t';

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(ContextValue value) noexcept {
  switch (value) {
    case ContextValue::Menu: return "Menu";
    case ContextValue::SelectedText: return "SelectedText";
    case ContextValue::None: return "None";
  }
  return "None";
}

ContextValue context_from_string(std::string_view text) {
  for (const auto c : kAllContexts)
    if (to_string(c) == text) return c;
  throw ParseError("unknown context value '" + std::string(text) + "'", 0);
}

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::S: return "s";
    case Level::SV: return "sv";
    case Level::SVC: return "svc";
  }
  return "svc";
}

Level level_from_string(std::string_view text) {
  for (const auto l : kAllLevels)
    if (to_string(l) == text) return l;
  throw InvalidArgument("unknown level identifier '" + std::string(text) + "'");
}

std::vector<Level> levels_from_string(std::string_view text) {
  std::vector<Level> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto token = trim(text.substr(0, comma));
    if (!token.empty()) {
      const Level l = level_from_string(token);
      if (std::find(out.begin(), out.end(), l) != out.end())
        throw InvalidArgument("level '" + std::string(token) + "' listed twice");
      out.push_back(l);
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw InvalidArgument("empty level list");
  return out;
}

std::string LevelKey::display() const {
  std::string out;
  for (const char c : value) {
    if (c == kSep)
      out += " / ";
    else
      out += c;
  }
  return out;
}

LevelKey project(const ChainLabel& label, Level level) {
  switch (level) {
    case Level::S: return {label.software};
    case Level::SV: return {label.software + kSep + label.view};
    case Level::SVC:
      return {label.software + kSep + label.view + kSep + std::string(to_string(label.context))};
  }
  throw InvalidArgument("unknown level identifier " +
                        std::to_string(static_cast<int>(level)));
}

LabelRegistry::LabelRegistry(std::vector<SoftwareView> pairs) : pairs_(std::move(pairs)) {
  std::set<SoftwareView> seen;
  for (const auto& [software, view] : pairs_) {
    if (software.empty() || view.empty())
      throw ParseError("registry entries must have non-empty software and view", 0);
    if (software.find(kSep) != std::string::npos || view.find(kSep) != std::string::npos)
      throw ParseError("registry class names may not contain tabs", 0);
    if (!seen.insert({software, view}).second)
      throw ParseError("duplicate registry entry '" + software + " / " + view + "'", 0);
    if (std::find(software_.begin(), software_.end(), software) == software_.end())
      software_.push_back(software);
  }
}

LabelRegistry LabelRegistry::default_registry() {
  return LabelRegistry({
      {"File Explorer", "Grid View"},
      {"File Explorer", "Options"},
      {"Web Browser", "Gmail"},
      {"Web Browser", "Google"},
      {"Web Browser", "Maps"},
      {"Web Browser", "New Tab"},
      {"Web Browser", "Save"},
      {"Web Browser", "Web Page"},
      {"Web Browser", "Web PDF"},
      {"Web Browser", "Options"},
      {"Spread Sheet", "Main View"},
      {"Spread Sheet", "Save"},
      {"Spread Sheet", "Options"},
      {"Image Viewer", "Main View"},
      {"Document Editor", "Main View"},
      {"Document Editor", "Save"},
      {"Document Editor", "Options"},
      {"PDFViewer", "Main View"},
      {"Terminal", "Main View"},
      {"Mail", "Gmail"},
      {"Mail", "Save"},
      {"Desktop", "Main View"},
      {"Presentation Editor", "Main View"},
      {"Presentation Editor", "Save"},
      {"Presentation Editor", "Options"},
  });
}

LabelRegistry LabelRegistry::parse(std::string_view text) {
  std::vector<SoftwareView> pairs;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find(kSep);
    if (tab == std::string_view::npos || line.find(kSep, tab + 1) != std::string_view::npos)
      throw ParseError("expected 'software<TAB>view'", line_no);
    const auto software = trim(line.substr(0, tab));
    const auto view = trim(line.substr(tab + 1));
    if (software.empty() || view.empty())
      throw ParseError("empty software or view name", line_no);
    pairs.emplace_back(std::string(software), std::string(view));
  }
  return LabelRegistry(std::move(pairs));
}

LabelRegistry LabelRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open registry file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void LabelRegistry::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write registry file " + path.string());
  for (const auto& [software, view] : pairs_) out << software << kSep << view << '\n';
}

std::vector<ChainLabel> LabelRegistry::chain_labels() const {
  std::vector<ChainLabel> out;
  out.reserve(pairs_.size() * kAllContexts.size());
  for (const auto& [software, view] : pairs_)
    for (const auto c : kAllContexts) out.push_back({software, view, c});
  return out;
}

bool LabelRegistry::contains(std::string_view software, std::string_view view) const {
  return std::any_of(pairs_.begin(), pairs_.end(), [&](const SoftwareView& p) {
    return p.first == software && p.second == view;
  });
}

bool LabelRegistry::contains_software(std::string_view software) const {
  return std::find(software_.begin(), software_.end(), software) != software_.end();
}

std::size_t LabelRegistry::class_count(Level level) const noexcept {
  switch (level) {
    case Level::S: return software_.size();
    case Level::SV: return pairs_.size();
    case Level::SVC: return pairs_.size() * kAllContexts.size();
  }
  return 0;
}

std::size_t LabelRegistry::ordinal(const LevelKey& key, Level level) const {
  std::size_t i = 0;
  if (level == Level::S) {
    for (const auto& s : software_) {
      if (s == key.value) return i;
      ++i;
    }
  } else {
    for (const auto& label : chain_labels()) {
      if (level == Level::SV && label.context != ContextValue::None) continue;
      if (project(label, level) == key) return i;
      ++i;
    }
  }
  return i + 1;  // unregistered keys sort last
}

const ChainLabel& validate(const ChainLabel& label, const LabelRegistry& registry) {
  if (!registry.contains(label.software, label.view))
    throw UnknownClass("unknown class pair ('" + label.software + "', '" + label.view + "')");
  return label;
}

}  // namespace uiwf
