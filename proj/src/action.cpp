#include "guire/action.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace guire {

namespace {

constexpr std::array<ActionSpec, kActionTypeCount> kRegistry = {{
    {ActionType::tap, "tap", ParamSignature::point, true, true, true},
    {ActionType::move_to, "move_to", ParamSignature::point, true, true, true},
    {ActionType::drag_to, "drag_to", ParamSignature::point, true, true, true},
    {ActionType::locate, "locate", ParamSignature::point, true, true, true},
    {ActionType::textentry, "textentry", ParamSignature::text, true, true, true},
    {ActionType::swipe, "swipe", ParamSignature::direction, true, true, true},
    {ActionType::terminate, "terminate", ParamSignature::reason, true, true, true},
    {ActionType::press_enter, "press_enter", ParamSignature::none, true, true, true},
    {ActionType::press_hotkey, "press_hotkey", ParamSignature::hotkeys, false, true, true},
    {ActionType::right_click, "right_click", ParamSignature::point, false, true, true},
    {ActionType::double_click, "double_click", ParamSignature::point, false, true, true},
    {ActionType::long_press, "long_press", ParamSignature::point, true, false, false},
    {ActionType::navigate_home, "navigate_home", ParamSignature::none, true, false, false},
    {ActionType::open_app, "open_app", ParamSignature::app_name, true, false, false},
    {ActionType::navigate_back, "navigate_back", ParamSignature::none, true, false, false},
}};

}  // namespace

const std::array<ActionSpec, kActionTypeCount>& action_registry() { return kRegistry; }

const ActionSpec& spec_of(ActionType t) { return kRegistry[static_cast<size_t>(t)]; }

std::optional<ActionType> action_type_from_name(std::string_view name) {
    for (const auto& s : kRegistry)
        if (s.name == name) return s.type;
    return std::nullopt;
}

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::up: return "up";
        case Direction::down: return "down";
        case Direction::left: return "left";
        case Direction::right: return "right";
    }
    return "up";
}

std::optional<Direction> direction_from_string(std::string_view s) {
    if (s == "up") return Direction::up;
    if (s == "down") return Direction::down;
    if (s == "left") return Direction::left;
    if (s == "right") return Direction::right;
    return std::nullopt;
}

std::string_view to_string(Platform p) {
    switch (p) {
        case Platform::mobile: return "mobile";
        case Platform::desktop: return "desktop";
        case Platform::web: return "web";
    }
    return "mobile";
}

std::optional<Platform> platform_from_string(std::string_view s) {
    if (s == "mobile") return Platform::mobile;
    if (s == "desktop") return Platform::desktop;
    if (s == "web") return Platform::web;
    return std::nullopt;
}

std::string_view to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::unknown_action: return "unknown_action";
        case ParseErrorKind::bad_signature: return "bad_signature";
        case ParseErrorKind::syntax_error: return "syntax_error";
        case ParseErrorKind::no_action: return "no_action";
    }
    return "syntax_error";
}

ParamSignature signature_of(const ActionParams& p) {
    struct Visitor {
        ParamSignature operator()(const std::monostate&) const { return ParamSignature::none; }
        ParamSignature operator()(const Point&) const { return ParamSignature::point; }
        ParamSignature operator()(const TextParam&) const { return ParamSignature::text; }
        ParamSignature operator()(const Direction&) const { return ParamSignature::direction; }
        ParamSignature operator()(const HotkeysParam&) const { return ParamSignature::hotkeys; }
        ParamSignature operator()(const AppNameParam&) const { return ParamSignature::app_name; }
        ParamSignature operator()(const ReasonParam&) const { return ParamSignature::reason; }
    };
    return std::visit(Visitor{}, p);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct RawArg {
    std::string key;
    bool is_string = false;
    std::string str_value;
    int64_t int_value = 0;
};

struct Lexer {
    std::string_view text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    bool accept(char c) {
        if (!eof() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
};

bool is_ident_char(char c) {
    return std::islower(static_cast<unsigned char>(c)) || c == '_' ||
           std::isdigit(static_cast<unsigned char>(c));
}

ParseError err(ParseErrorKind kind, std::string msg) { return ParseError{kind, std::move(msg)}; }

// name "(" arglist? ")" with optional surrounding whitespace; nothing may
// follow the closing parenthesis.
std::variant<std::pair<std::string, std::vector<RawArg>>, ParseError> parse_call(
    std::string_view text) {
    Lexer lx{text};
    lx.skip_ws();
    size_t start = lx.pos;
    while (!lx.eof() && is_ident_char(lx.peek())) ++lx.pos;
    if (lx.pos == start) return err(ParseErrorKind::syntax_error, "expected action name");
    std::string name(text.substr(start, lx.pos - start));
    lx.skip_ws();
    if (!lx.accept('(')) return err(ParseErrorKind::syntax_error, "expected '('");
    lx.skip_ws();
    std::vector<RawArg> args;
    if (!lx.accept(')')) {
        while (true) {
            lx.skip_ws();
            size_t kstart = lx.pos;
            while (!lx.eof() && is_ident_char(lx.peek())) ++lx.pos;
            if (lx.pos == kstart) return err(ParseErrorKind::syntax_error, "expected argument key");
            RawArg arg;
            arg.key = std::string(text.substr(kstart, lx.pos - kstart));
            lx.skip_ws();
            if (!lx.accept('=')) return err(ParseErrorKind::syntax_error, "expected '='");
            lx.skip_ws();
            if (lx.eof()) return err(ParseErrorKind::syntax_error, "expected value");
            if (lx.peek() == '"') {
                ++lx.pos;
                std::string out;
                bool closed = false;
                while (!lx.eof()) {
                    char c = text[lx.pos++];
                    if (c == '"') {
                        closed = true;
                        break;
                    }
                    if (c == '\\') {
                        if (lx.eof())
                            return err(ParseErrorKind::syntax_error, "dangling escape in string");
                        char e = text[lx.pos++];
                        if (e != '"' && e != '\\')
                            return err(ParseErrorKind::syntax_error,
                                       "unknown escape in string: \\" + std::string(1, e));
                        out.push_back(e);
                    } else {
                        out.push_back(c);
                    }
                }
                if (!closed) return err(ParseErrorKind::syntax_error, "unterminated string");
                arg.is_string = true;
                arg.str_value = std::move(out);
            } else {
                size_t vstart = lx.pos;
                if (!lx.eof() && (lx.peek() == '-' || lx.peek() == '+')) ++lx.pos;
                size_t dstart = lx.pos;
                while (!lx.eof() && std::isdigit(static_cast<unsigned char>(lx.peek()))) ++lx.pos;
                if (lx.pos == dstart)
                    return err(ParseErrorKind::syntax_error, "expected integer or quoted string");
                // trailing '.' or other junk directly after digits is a grammar
                // violation (fractional coordinates are rejected here)
                if (!lx.eof() && (lx.peek() == '.' || is_ident_char(lx.peek())))
                    return err(ParseErrorKind::syntax_error, "malformed integer value");
                try {
                    arg.int_value = std::stoll(std::string(text.substr(vstart, lx.pos - vstart)));
                } catch (const std::exception&) {
                    return err(ParseErrorKind::syntax_error, "integer out of range");
                }
            }
            args.push_back(std::move(arg));
            lx.skip_ws();
            if (lx.accept(')')) break;
            if (!lx.accept(','))
                return err(ParseErrorKind::syntax_error, "expected ',' or ')'");
        }
    }
    lx.skip_ws();
    if (!lx.eof()) return err(ParseErrorKind::syntax_error, "trailing characters after ')'");
    return std::make_pair(std::move(name), std::move(args));
}

const RawArg* find_arg(const std::vector<RawArg>& args, std::string_view key) {
    for (const auto& a : args)
        if (a.key == key) return &a;
    return nullptr;
}

std::optional<ParseError> check_keys(const std::vector<RawArg>& args,
                                     std::vector<std::string_view> expected) {
    if (args.size() != expected.size())
        return err(ParseErrorKind::bad_signature, "wrong number of arguments");
    for (const auto& a : args) {
        auto it = std::find(expected.begin(), expected.end(), a.key);
        if (it == expected.end())
            return err(ParseErrorKind::bad_signature, "unexpected argument: " + a.key);
        expected.erase(it);  // duplicates fall out as missing keys
    }
    if (!expected.empty())
        return err(ParseErrorKind::bad_signature,
                   "missing argument: " + std::string(expected.front()));
    return std::nullopt;
}

std::vector<std::string> split_hotkeys(const std::string& joined) {
    std::vector<std::string> keys;
    std::string cur;
    for (char c : joined) {
        if (c == '+') {
            keys.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    keys.push_back(cur);
    return keys;
}

}  // namespace

Parsed<Action> parse_action(std::string_view text) {
    auto call = parse_call(text);
    if (std::holds_alternative<ParseError>(call)) return std::get<ParseError>(call);
    auto& [name, args] = std::get<0>(call);

    auto type = action_type_from_name(name);
    if (!type) return err(ParseErrorKind::unknown_action, "unknown action: " + name);
    const ActionSpec& spec = spec_of(*type);

    Action out;
    out.type = *type;
    switch (spec.signature) {
        case ParamSignature::point: {
            if (auto e = check_keys(args, {"x", "y"})) return *e;
            const RawArg* ax = find_arg(args, "x");
            const RawArg* ay = find_arg(args, "y");
            if (ax->is_string || ay->is_string)
                return err(ParseErrorKind::bad_signature, "coordinates must be integers");
            if (ax->int_value < 0 || ay->int_value < 0)
                return err(ParseErrorKind::bad_signature, "coordinates must be non-negative");
            out.params = Point{ax->int_value, ay->int_value};
            break;
        }
        case ParamSignature::text: {
            if (auto e = check_keys(args, {"texts"})) return *e;
            const RawArg* a = find_arg(args, "texts");
            if (!a->is_string) return err(ParseErrorKind::bad_signature, "texts must be a string");
            out.params = TextParam{a->str_value};
            break;
        }
        case ParamSignature::direction: {
            if (auto e = check_keys(args, {"direction"})) return *e;
            const RawArg* a = find_arg(args, "direction");
            if (!a->is_string)
                return err(ParseErrorKind::bad_signature, "direction must be a string");
            auto d = direction_from_string(a->str_value);
            if (!d)
                return err(ParseErrorKind::bad_signature,
                           "direction must be up, down, left or right");
            out.params = *d;
            break;
        }
        case ParamSignature::hotkeys: {
            if (auto e = check_keys(args, {"hotkeys"})) return *e;
            const RawArg* a = find_arg(args, "hotkeys");
            if (!a->is_string)
                return err(ParseErrorKind::bad_signature, "hotkeys must be a string");
            auto keys = split_hotkeys(a->str_value);
            for (const auto& k : keys)
                if (k.empty())
                    return err(ParseErrorKind::bad_signature, "empty key name in hotkeys");
            out.params = HotkeysParam{std::move(keys)};
            break;
        }
        case ParamSignature::app_name: {
            if (auto e = check_keys(args, {"app_name"})) return *e;
            const RawArg* a = find_arg(args, "app_name");
            if (!a->is_string)
                return err(ParseErrorKind::bad_signature, "app_name must be a string");
            out.params = AppNameParam{a->str_value};
            break;
        }
        case ParamSignature::reason: {
            if (auto e = check_keys(args, {"reason"})) return *e;
            const RawArg* a = find_arg(args, "reason");
            if (!a->is_string)
                return err(ParseErrorKind::bad_signature, "reason must be a string");
            out.params = ReasonParam{a->str_value};
            break;
        }
        case ParamSignature::none: {
            if (auto e = check_keys(args, {})) return *e;
            out.params = std::monostate{};
            break;
        }
    }
    return out;
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string serialize_action(const Action& a) {
    const ActionSpec& spec = spec_of(a.type);
    if (signature_of(a.params) != spec.signature)
        throw std::invalid_argument("serialize_action: params do not match signature of " +
                                    std::string(spec.name));
    std::string out(spec.name);
    out.push_back('(');
    struct Visitor {
        std::string& out;
        void operator()(const std::monostate&) {}
        void operator()(const Point& p) {
            out += "x=" + std::to_string(p.x) + ", y=" + std::to_string(p.y);
        }
        void operator()(const TextParam& t) { out += "texts=" + quote(t.value); }
        void operator()(const Direction& d) {
            out += "direction=" + quote(std::string(to_string(d)));
        }
        void operator()(const HotkeysParam& h) {
            std::string joined;
            for (size_t i = 0; i < h.keys.size(); ++i) {
                if (i) joined.push_back('+');
                joined += h.keys[i];
            }
            out += "hotkeys=" + quote(joined);
        }
        void operator()(const AppNameParam& v) { out += "app_name=" + quote(v.value); }
        void operator()(const ReasonParam& v) { out += "reason=" + quote(v.value); }
    };
    std::visit(Visitor{out}, a.params);
    out.push_back(')');
    return out;
}

namespace {

std::string trim_copy(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Returns the text after `marker` if the line starts with it (allowing
// leading whitespace), else nullopt.
std::optional<std::string_view> after_marker(std::string_view line, std::string_view marker) {
    size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    if (line.substr(b).starts_with(marker)) return line.substr(b + marker.size());
    return std::nullopt;
}

}  // namespace

Parsed<CandidateOutput> extract_candidate(std::string_view raw) {
    CandidateOutput cand;
    cand.raw = std::string(raw);
    std::optional<Action> last_action;

    size_t pos = 0;
    while (pos <= raw.size()) {
        size_t nl = raw.find('\n', pos);
        std::string_view line = raw.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        if (auto rest = after_marker(line, "Plan:")) {
            cand.plan = trim_copy(*rest);
        } else if (auto rest = after_marker(line, "Think:")) {
            cand.think = trim_copy(*rest);
        } else if (auto rest = after_marker(line, "Reflect:")) {
            cand.reflect = trim_copy(*rest);
        } else if (auto rest = after_marker(line, "Action:")) {
            auto parsed = parse_action(*rest);
            if (ok(parsed)) last_action = value(parsed);
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    if (!last_action)
        return ParseError{ParseErrorKind::no_action, "no well-formed action call found"};
    cand.action = *last_action;
    return cand;
}

std::optional<ValidationError> validate_action(const Action& a, Platform platform) {
    const ActionSpec& spec = spec_of(a.type);
    if (signature_of(a.params) != spec.signature)
        return ValidationError{ValidationErrorKind::bad_signature,
                               "params do not match signature of " + std::string(spec.name)};
    if (const Point* p = std::get_if<Point>(&a.params); p && (p->x < 0 || p->y < 0))
        return ValidationError{ValidationErrorKind::bad_signature,
                               "coordinates must be non-negative"};
    if (!spec.available_on(platform))
        return ValidationError{ValidationErrorKind::platform_mismatch,
                               std::string(spec.name) + " is not available on " +
                                   std::string(to_string(platform))};
    return std::nullopt;
}

std::string format_candidate_text(const std::optional<std::string>& plan,
                                  const std::optional<std::string>& think,
                                  const std::optional<std::string>& reflect, const Action& action) {
    std::string out;
    if (plan) out += "Plan: " + *plan + "\n";
    if (think) out += "Think: " + *think + "\n";
    if (reflect) out += "Reflect: " + *reflect + "\n";
    out += "Action: " + serialize_action(action);
    return out;
}

}  // namespace guire
