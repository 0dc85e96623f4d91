#include <doctest.h>

#include <random>

#include "guire/action.hpp"

using namespace guire;

namespace {

// random valid action across all fifteen types, params randomized
Action random_action(std::mt19937_64& rng) {
    const auto& registry = action_registry();
    const ActionSpec& spec = registry[rng() % registry.size()];
    Action a;
    a.type = spec.type;
    auto rand_string = [&](bool allow_tricky) {
        const std::string alphabet = allow_tricky ? "abc XYZ09\"\\\n\t=,()" : "abcdefgh";
        std::string s;
        const size_t len = rng() % 12;
        for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        return s;
    };
    switch (spec.signature) {
        case ParamSignature::point:
            a.params = Point{static_cast<int64_t>(rng() % 4000),
                             static_cast<int64_t>(rng() % 4000)};
            break;
        case ParamSignature::text: a.params = TextParam{rand_string(true)}; break;
        case ParamSignature::direction:
            a.params = static_cast<Direction>(rng() % 4);
            break;
        case ParamSignature::hotkeys: {
            HotkeysParam h;
            const size_t n = 1 + rng() % 3;
            const char* keys[] = {"ctrl", "alt", "shift", "c", "v", "tab", "f5"};
            for (size_t i = 0; i < n; ++i) h.keys.push_back(keys[rng() % 7]);
            a.params = h;
            break;
        }
        case ParamSignature::app_name: a.params = AppNameParam{rand_string(true)}; break;
        case ParamSignature::reason: a.params = ReasonParam{rand_string(true)}; break;
        case ParamSignature::none: a.params = std::monostate{}; break;
    }
    return a;
}

}  // namespace

TEST_CASE("registry holds exactly the fifteen table rows") {
    const auto& reg = action_registry();
    CHECK(reg.size() == 15);
    // names unique and lowercase
    for (size_t i = 0; i < reg.size(); ++i) {
        for (char c : reg[i].name) CHECK((std::islower(c) || c == '_'));
        for (size_t j = i + 1; j < reg.size(); ++j) CHECK(reg[i].name != reg[j].name);
        CHECK(reg[i].type == static_cast<ActionType>(i));
    }
    // spot-check platform sets and signatures against the table
    CHECK(spec_of(ActionType::tap).signature == ParamSignature::point);
    CHECK(spec_of(ActionType::tap).available_on(Platform::mobile));
    CHECK(spec_of(ActionType::tap).available_on(Platform::desktop));
    CHECK(spec_of(ActionType::press_hotkey).available_on(Platform::desktop));
    CHECK(spec_of(ActionType::press_hotkey).available_on(Platform::web));
    CHECK_FALSE(spec_of(ActionType::press_hotkey).available_on(Platform::mobile));
    CHECK(spec_of(ActionType::long_press).available_on(Platform::mobile));
    CHECK_FALSE(spec_of(ActionType::long_press).available_on(Platform::web));
    CHECK(spec_of(ActionType::open_app).signature == ParamSignature::app_name);
    CHECK_FALSE(spec_of(ActionType::open_app).available_on(Platform::desktop));
    CHECK(spec_of(ActionType::terminate).signature == ParamSignature::reason);
    CHECK(spec_of(ActionType::navigate_back).signature == ParamSignature::none);
}

TEST_CASE("parse_action grammar") {
    auto p = parse_action("tap(x=120, y=340)");
    REQUIRE(ok(p));
    CHECK(value(p) == Action{ActionType::tap, Point{120, 340}});

    auto nullary = parse_action("press_enter()");
    REQUIRE(ok(nullary));
    CHECK(value(nullary) == Action{ActionType::press_enter, std::monostate{}});

    auto bad_dir = parse_action("swipe(direction=\"sideways\")");
    REQUIRE_FALSE(ok(bad_dir));
    CHECK(error(bad_dir).kind == ParseErrorKind::bad_signature);

    auto unknown = parse_action("fly(x=1, y=2)");
    REQUIRE_FALSE(ok(unknown));
    CHECK(error(unknown).kind == ParseErrorKind::unknown_action);

    auto fractional = parse_action("tap(x=1.5, y=2)");
    REQUIRE_FALSE(ok(fractional));
    CHECK(error(fractional).kind == ParseErrorKind::syntax_error);

    auto negative = parse_action("tap(x=-3, y=2)");
    REQUIRE_FALSE(ok(negative));
    CHECK(error(negative).kind == ParseErrorKind::bad_signature);

    auto missing = parse_action("tap(x=3)");
    REQUIRE_FALSE(ok(missing));
    CHECK(error(missing).kind == ParseErrorKind::bad_signature);

    auto duplicate = parse_action("tap(x=3, x=4)");
    REQUIRE_FALSE(ok(duplicate));
    CHECK(error(duplicate).kind == ParseErrorKind::bad_signature);

    auto extra = parse_action("press_enter(x=1)");
    REQUIRE_FALSE(ok(extra));
    CHECK(error(extra).kind == ParseErrorKind::bad_signature);

    auto trailing = parse_action("tap(x=1, y=2) and more");
    REQUIRE_FALSE(ok(trailing));
    CHECK(error(trailing).kind == ParseErrorKind::syntax_error);

    // keys may arrive in any order
    auto swapped = parse_action("tap(y=2, x=1)");
    REQUIRE(ok(swapped));
    CHECK(value(swapped) == Action{ActionType::tap, Point{1, 2}});

    // escapes
    auto escaped = parse_action(R"(textentry(texts="say \"hi\" \\ done"))");
    REQUIRE(ok(escaped));
    CHECK(std::get<TextParam>(value(escaped).params).value == "say \"hi\" \\ done");

    auto bad_escape = parse_action(R"(textentry(texts="a\nb"))");
    REQUIRE_FALSE(ok(bad_escape));
    CHECK(error(bad_escape).kind == ParseErrorKind::syntax_error);

    auto hotkeys = parse_action("press_hotkey(hotkeys=\"ctrl+c\")");
    REQUIRE(ok(hotkeys));
    CHECK(std::get<HotkeysParam>(value(hotkeys).params).keys ==
          std::vector<std::string>{"ctrl", "c"});
}

TEST_CASE("serialize_action canonical forms") {
    CHECK(serialize_action(Action{ActionType::textentry, TextParam{"hello"}}) ==
          "textentry(texts=\"hello\")");
    CHECK(serialize_action(Action{ActionType::open_app, AppNameParam{"Broccoli"}}) ==
          "open_app(app_name=\"Broccoli\")");
    CHECK(serialize_action(Action{ActionType::terminate, ReasonParam{"goal done"}}) ==
          "terminate(reason=\"goal done\")");
    CHECK(serialize_action(Action{ActionType::tap, Point{120, 340}}) == "tap(x=120, y=340)");
    CHECK(serialize_action(Action{ActionType::press_enter, std::monostate{}}) ==
          "press_enter()");
    CHECK(serialize_action(Action{ActionType::press_hotkey,
                                  HotkeysParam{{"ctrl", "shift", "p"}}}) ==
          "press_hotkey(hotkeys=\"ctrl+shift+p\")");
    CHECK(serialize_action(Action{ActionType::swipe, Direction::left}) ==
          "swipe(direction=\"left\")");
}

TEST_CASE("round trip over randomized actions of all fifteen types") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 20000; ++i) {
        const Action a = random_action(rng);
        const auto back = parse_action(serialize_action(a));
        REQUIRE(ok(back));
        CHECK(value(back) == a);
    }
}

TEST_CASE("parsing tolerates whitespace around punctuation") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 2000; ++i) {
        const Action a = random_action(rng);
        std::string text = serialize_action(a);
        // pad around structural characters outside of quoted strings
        std::string padded;
        bool in_string = false;
        bool escaped = false;
        for (char c : text) {
            if (in_string) {
                padded.push_back(c);
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
                padded.push_back(c);
                continue;
            }
            if (c == '(' || c == ')' || c == ',' || c == '=') {
                if (rng() % 2) padded.push_back(' ');
                padded.push_back(c);
                if (rng() % 2) padded.push_back(' ');
            } else {
                padded.push_back(c);
            }
        }
        const auto parsed = parse_action(padded);
        REQUIRE(ok(parsed));
        CHECK(value(parsed) == a);
    }
}

TEST_CASE("mutated strings never escape as exceptions") {
    std::mt19937_64 rng(31337);
    const std::string junk = "()=\",\\xy0123abcdefghijklmnop_ \t\n";
    int parsed_ok = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string text = serialize_action(random_action(rng));
        const size_t mutations = 1 + rng() % 4;
        for (size_t m = 0; m < mutations; ++m) {
            if (text.empty()) break;
            const size_t pos = rng() % text.size();
            switch (rng() % 3) {
                case 0: text[pos] = junk[rng() % junk.size()]; break;
                case 1: text.erase(pos, 1); break;
                case 2: text.insert(pos, 1, junk[rng() % junk.size()]); break;
            }
        }
        const auto result = parse_action(text);  // must not throw
        parsed_ok += ok(result) ? 1 : 0;
    }
    CHECK(parsed_ok >= 0);  // reaching here without an exception is the point
}

TEST_CASE("extract_candidate sections and last-action rule") {
    auto single = extract_candidate("Plan: open settings\nAction: tap(x=10, y=20)");
    REQUIRE(ok(single));
    CHECK(value(single).plan == "open settings");
    CHECK_FALSE(value(single).think.has_value());
    CHECK(value(single).action == Action{ActionType::tap, Point{10, 20}});

    auto last = extract_candidate("Action: tap(x=1, y=1)\nAction: tap(x=5, y=9)");
    REQUIRE(ok(last));
    CHECK(value(last).action == Action{ActionType::tap, Point{5, 9}});

    auto none = extract_candidate("I will click somewhere");
    REQUIRE_FALSE(ok(none));
    CHECK(error(none).kind == ParseErrorKind::no_action);

    auto all = extract_candidate(
        "Plan: p\nThink: t\nReflect: r\nAction: swipe(direction=\"up\")");
    REQUIRE(ok(all));
    CHECK(value(all).plan == "p");
    CHECK(value(all).think == "t");
    CHECK(value(all).reflect == "r");

    // a malformed final call falls back to the previous well-formed one
    auto fallback = extract_candidate("Action: tap(x=2, y=3)\nAction: tap(x=, y=)");
    REQUIRE(ok(fallback));
    CHECK(value(fallback).action == Action{ActionType::tap, Point{2, 3}});
}

TEST_CASE("extract_candidate is idempotent on its raw field") {
    const std::string raw = "Plan: go\nThink: hmm\nAction: locate(x=3, y=4)";
    auto first = extract_candidate(raw);
    REQUIRE(ok(first));
    auto second = extract_candidate(value(first).raw);
    REQUIRE(ok(second));
    CHECK(value(first) == value(second));
}

TEST_CASE("validate_action enforces the platform table") {
    CHECK(validate_action(Action{ActionType::open_app, AppNameParam{"Mail"}}, Platform::desktop)
              .has_value());
    CHECK_FALSE(
        validate_action(Action{ActionType::tap, Point{3, 4}}, Platform::mobile).has_value());
    auto hotkey = validate_action(Action{ActionType::press_hotkey, HotkeysParam{{"ctrl", "c"}}},
                                  Platform::mobile);
    REQUIRE(hotkey.has_value());
    CHECK(hotkey->kind == ValidationErrorKind::platform_mismatch);

    auto wrong_params = validate_action(Action{ActionType::tap, TextParam{"x"}}, Platform::web);
    REQUIRE(wrong_params.has_value());
    CHECK(wrong_params->kind == ValidationErrorKind::bad_signature);
}

TEST_CASE("format_candidate_text reparses to the same candidate") {
    const Action a{ActionType::drag_to, Point{44, 55}};
    const std::string text = format_candidate_text("move the slider", "target is right of center",
                                                   std::nullopt, a);
    auto cand = extract_candidate(text);
    REQUIRE(ok(cand));
    CHECK(value(cand).plan == "move the slider");
    CHECK(value(cand).think == "target is right of center");
    CHECK_FALSE(value(cand).reflect.has_value());
    CHECK(value(cand).action == a);
}
