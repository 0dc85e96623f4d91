#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "guire/geometry.hpp"

namespace guire {

// Unified action space: fifteen operations spanning mobile, desktop and web,
// each with a fixed parameter signature and a platform set. Actions travel as
// function-call text, e.g. `tap(x=120, y=340)`; see parse_action / serialize_action.

enum class ActionType {
    tap,
    move_to,
    drag_to,
    locate,
    textentry,
    swipe,
    terminate,
    press_enter,
    press_hotkey,
    right_click,
    double_click,
    long_press,
    navigate_home,
    open_app,
    navigate_back,
};

inline constexpr int kActionTypeCount = 15;

enum class Platform { mobile, desktop, web };

enum class ParamSignature { point, text, direction, hotkeys, app_name, reason, none };

struct ActionSpec {
    ActionType type;
    std::string_view name;
    ParamSignature signature;
    bool on_mobile;
    bool on_desktop;
    bool on_web;

    bool available_on(Platform p) const {
        switch (p) {
            case Platform::mobile: return on_mobile;
            case Platform::desktop: return on_desktop;
            case Platform::web: return on_web;
        }
        return false;
    }
};

// Registry of all fifteen actions, one entry per ActionType, in declaration order.
const std::array<ActionSpec, kActionTypeCount>& action_registry();

const ActionSpec& spec_of(ActionType t);
std::optional<ActionType> action_type_from_name(std::string_view name);

enum class Direction { up, down, left, right };

std::string_view to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view s);
std::string_view to_string(Platform p);
std::optional<Platform> platform_from_string(std::string_view s);

struct TextParam {
    std::string value;
    friend bool operator==(const TextParam&, const TextParam&) = default;
};
struct HotkeysParam {
    std::vector<std::string> keys;  // serialized as one "+"-joined string
    friend bool operator==(const HotkeysParam&, const HotkeysParam&) = default;
};
struct AppNameParam {
    std::string value;
    friend bool operator==(const AppNameParam&, const AppNameParam&) = default;
};
struct ReasonParam {
    std::string value;
    friend bool operator==(const ReasonParam&, const ReasonParam&) = default;
};

// monostate = no parameters (press_enter, navigate_home, navigate_back).
using ActionParams =
    std::variant<std::monostate, Point, TextParam, Direction, HotkeysParam, AppNameParam, ReasonParam>;

ParamSignature signature_of(const ActionParams& p);

struct Action {
    ActionType type = ActionType::tap;
    ActionParams params;

    friend bool operator==(const Action&, const Action&) = default;
};

enum class ParseErrorKind { unknown_action, bad_signature, syntax_error, no_action };

struct ParseError {
    ParseErrorKind kind = ParseErrorKind::syntax_error;
    std::string message;
};

std::string_view to_string(ParseErrorKind k);

template <typename T>
using Parsed = std::variant<T, ParseError>;

template <typename T>
bool ok(const Parsed<T>& p) {
    return std::holds_alternative<T>(p);
}
template <typename T>
const T& value(const Parsed<T>& p) {
    return std::get<T>(p);
}
template <typename T>
const ParseError& error(const Parsed<T>& p) {
    return std::get<ParseError>(p);
}

// One sampled model output: optional chain-of-thought sections followed by
// exactly one action. `raw` is the original text and re-parses to the same fields.
struct CandidateOutput {
    std::optional<std::string> plan;
    std::optional<std::string> think;
    std::optional<std::string> reflect;
    Action action;
    std::string raw;

    friend bool operator==(const CandidateOutput&, const CandidateOutput&) = default;
};

// Parses one function-call action. Grammar (whitespace-tolerant around
// punctuation):
//   action  := name "(" arglist? ")"
//   arglist := arg ("," arg)*
//   arg     := key "=" value
//   value   := INT | '"' chars '"'     (backslash escapes for `"` and `\`)
// Coordinates must be non-negative integers; fractional values are a syntax
// error. Keys may appear in any order but must match the signature exactly.
Parsed<Action> parse_action(std::string_view text);

// Canonical inverse of parse_action: lowercase name, params in signature
// order, ", " between arguments, strings double-quoted with `\"` and `\\`
// escapes. parse_action(serialize_action(a)) == a for every valid action.
std::string serialize_action(const Action& a);

// Scans for optional "Plan:" / "Think:" / "Reflect:" section lines and takes
// the last well-formed action call on an "Action:" line. Missing sections are
// empty optionals; no parseable action yields ParseErrorKind::no_action.
Parsed<CandidateOutput> extract_candidate(std::string_view raw);

enum class ValidationErrorKind { platform_mismatch, bad_signature };

struct ValidationError {
    ValidationErrorKind kind;
    std::string message;
};

// ok (nullopt) iff the platform is in the action's platform set and the
// params variant matches the declared signature.
std::optional<ValidationError> validate_action(const Action& a, Platform platform);

// Render the candidate text format: section lines then "Action: <call>".
std::string format_candidate_text(const std::optional<std::string>& plan,
                                  const std::optional<std::string>& think,
                                  const std::optional<std::string>& reflect, const Action& action);

}  // namespace guire
