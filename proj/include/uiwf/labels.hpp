#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uiwf {

enum class ContextValue { Menu, SelectedText, None };

inline constexpr std::array<ContextValue, 3> kAllContexts{ContextValue::Menu,
                                                          ContextValue::SelectedText,
                                                          ContextValue::None};

std::string_view to_string(ContextValue value) noexcept;
ContextValue context_from_string(std::string_view text);

// Hierarchy levels in chain order: software, software-view, software-view-context.
enum class Level { S = 0, SV = 1, SVC = 2 };

inline constexpr std::array<Level, 3> kAllLevels{Level::S, Level::SV, Level::SVC};

std::string_view to_string(Level level) noexcept;
Level level_from_string(std::string_view text);
// Parses a comma separated list such as "s,sv,svc".
std::vector<Level> levels_from_string(std::string_view text);

struct ChainLabel {
  std::string software;
  std::string view;
  ContextValue context = ContextValue::None;

  friend bool operator==(const ChainLabel&, const ChainLabel&) = default;
};

// Truncated chain key for one hierarchy level. Components are joined with a
// tab, which can never occur inside a registry class name.
struct LevelKey {
  std::string value;

  std::string display() const;  // "Mail / Gmail / SelectedText"

  friend auto operator<=>(const LevelKey&, const LevelKey&) = default;
  friend bool operator==(const LevelKey&, const LevelKey&) = default;
};

LevelKey project(const ChainLabel& label, Level level);

class LabelRegistry {
public:
  using SoftwareView = std::pair<std::string, std::string>;

  LabelRegistry() = default;
  explicit LabelRegistry(std::vector<SoftwareView> pairs);

  // The 25 software/view rows of the recorded dataset, in table order.
  static LabelRegistry default_registry();
  // One "software<TAB>view" line per pair; blank lines and '#' comments ignored.
  static LabelRegistry load(const std::filesystem::path& path);
  static LabelRegistry parse(std::string_view text);
  void save(const std::filesystem::path& path) const;

  const std::vector<std::string>& software_classes() const noexcept { return software_; }
  const std::vector<SoftwareView>& software_views() const noexcept { return pairs_; }
  std::vector<ChainLabel> chain_labels() const;  // every svc triple

  bool contains(std::string_view software, std::string_view view) const;
  bool contains_software(std::string_view software) const;
  std::size_t class_count(Level level) const noexcept;

  // Position of a key in registry enumeration order, used to order tables.
  std::size_t ordinal(const LevelKey& key, Level level) const;

private:
  std::vector<std::string> software_;
  std::vector<SoftwareView> pairs_;
};

// Returns the label unchanged when (software, view) is registered, otherwise
// throws UnknownClass naming the pair.
const ChainLabel& validate(const ChainLabel& label, const LabelRegistry& registry);

}  // namespace uiwf
