#pragma once

#include <random>
#include <string>

#include "guire/action.hpp"

namespace guire_test {

// random valid action across all fifteen types, params randomized; strings
// may contain quotes, backslashes, separators and newlines
inline guire::Action random_action(std::mt19937_64& rng) {
    using namespace guire;
    const auto& registry = action_registry();
    const ActionSpec& spec = registry[rng() % registry.size()];
    Action a;
    a.type = spec.type;
    auto rand_string = [&] {
        const std::string alphabet = "abc XYZ09\"\\\n\t=,()";
        std::string s;
        const size_t len = rng() % 12;
        for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        return s;
    };
    switch (spec.signature) {
        case ParamSignature::point:
            a.params =
                Point{static_cast<int64_t>(rng() % 4000), static_cast<int64_t>(rng() % 4000)};
            break;
        case ParamSignature::text: a.params = TextParam{rand_string()}; break;
        case ParamSignature::direction: a.params = static_cast<Direction>(rng() % 4); break;
        case ParamSignature::hotkeys: {
            HotkeysParam h;
            const size_t n = 1 + rng() % 3;
            const char* keys[] = {"ctrl", "alt", "shift", "c", "v", "tab", "f5"};
            for (size_t i = 0; i < n; ++i) h.keys.push_back(keys[rng() % 7]);
            a.params = h;
            break;
        }
        case ParamSignature::app_name: a.params = AppNameParam{rand_string()}; break;
        case ParamSignature::reason: a.params = ReasonParam{rand_string()}; break;
        case ParamSignature::none: a.params = std::monostate{}; break;
    }
    return a;
}

inline std::string mutate(std::string text, std::mt19937_64& rng) {
    const std::string junk = "()=\",\\xy0123abcdefghijklmnop_ \t\n";
    const size_t mutations = 1 + rng() % 4;
    for (size_t m = 0; m < mutations && !text.empty(); ++m) {
        const size_t pos = rng() % text.size();
        switch (rng() % 3) {
            case 0: text[pos] = junk[rng() % junk.size()]; break;
            case 1: text.erase(pos, 1); break;
            case 2: text.insert(pos, 1, junk[rng() % junk.size()]); break;
        }
    }
    return text;
}

}  // namespace guire_test
