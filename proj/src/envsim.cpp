#include "guire/envsim.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace guire {

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Environment::Environment(EnvDefinition def) : def_(std::move(def)) {
    if (!valid(def_.dims)) throw EnvError("environment dims must be positive");
    if (def_.screens.empty()) throw EnvError("environment has no screens");
    for (size_t i = 0; i < def_.screens.size(); ++i) {
        const Screen& s = def_.screens[i];
        if (!screen_index_.emplace(s.id, i).second)
            throw EnvError("duplicate screen id: " + s.id);
        std::set<std::string> element_ids;
        for (const Element& e : s.elements) {
            if (!element_ids.insert(e.id).second)
                throw EnvError("duplicate element id " + e.id + " on screen " + s.id);
            if (!valid(e.bbox) || e.bbox.x_max > def_.dims.width ||
                e.bbox.y_max > def_.dims.height)
                throw EnvError("element " + e.id + " on screen " + s.id +
                               " is outside the screen");
        }
        if (s.focus && !element_ids.count(*s.focus))
            throw EnvError("focus element " + *s.focus + " missing on screen " + s.id);
    }
    for (const Transition& t : def_.transitions) {
        if (!screen_index_.count(t.screen))
            throw EnvError("transition references unknown screen " + t.screen);
        if (!screen_index_.count(t.to_screen))
            throw EnvError("transition targets unknown screen " + t.to_screen);
        if (t.element) {
            const Screen& s = def_.screens[screen_index_.at(t.screen)];
            bool found = std::any_of(s.elements.begin(), s.elements.end(),
                                     [&](const Element& e) { return e.id == *t.element; });
            if (!found)
                throw EnvError("transition references unknown element " + *t.element +
                               " on screen " + t.screen);
        }
    }
    for (const Task& task : def_.tasks) {
        if (!screen_index_.count(task.initial_screen))
            throw EnvError("task " + task.id + " starts on unknown screen " +
                           task.initial_screen);
        if (task.difficulty < 1) throw EnvError("task " + task.id + " difficulty must be >= 1");
    }
}

const Screen& Environment::screen(const std::string& id) const {
    auto it = screen_index_.find(id);
    if (it == screen_index_.end()) throw EnvError("unknown screen: " + id);
    return def_.screens[it->second];
}

std::optional<Task> Environment::task(const std::string& id) const {
    for (const Task& t : def_.tasks)
        if (t.id == id) return t;
    return std::nullopt;
}

EnvState Environment::initial_state(const Task& task) const {
    EnvState st;
    st.screen_id = task.initial_screen;
    return st;
}

bool Environment::evaluate(const SuccessPredicate& pred, const EnvState& state) const {
    switch (pred.kind) {
        case SuccessPredicate::Kind::screen_is: return state.screen_id == pred.screen;
        case SuccessPredicate::Kind::flag_set: return state.flags.count(pred.flag) > 0;
        case SuccessPredicate::Kind::buffer_equals: {
            auto it = state.buffers.find(pred.screen + "/" + pred.element);
            return it != state.buffers.end() && it->second == pred.value;
        }
        case SuccessPredicate::Kind::all_of:
            return std::all_of(pred.children.begin(), pred.children.end(),
                               [&](const SuccessPredicate& c) { return evaluate(c, state); });
    }
    return false;
}

bool Environment::succeeded(const Task& task, const EnvState& state) const {
    return evaluate(task.success, state);
}

std::optional<std::string> Environment::hit_test(const Screen& scr, const Point& p) const {
    if (!in_screen(def_.dims, p)) throw EnvError("hit_test: point outside screen");
    const Element* best = nullptr;
    for (const Element& e : scr.elements) {
        if (!contains(e.bbox, p)) continue;
        if (!best || e.z_order >= best->z_order) best = &e;  // later position wins ties
    }
    if (!best) return std::nullopt;
    return best->id;
}

const Transition* Environment::find_transition(const std::string& screen,
                                               const std::optional<std::string>& element,
                                               ActionType type,
                                               const std::optional<std::string>& param) const {
    for (const Transition& t : def_.transitions) {
        if (t.screen != screen || t.on_action != type) continue;
        if (t.element != element) continue;
        if (t.param && param != t.param) continue;
        return &t;
    }
    return nullptr;
}

namespace {

std::optional<std::string> param_pattern(const Action& a) {
    if (const auto* d = std::get_if<Direction>(&a.params)) return std::string(to_string(*d));
    if (const auto* app = std::get_if<AppNameParam>(&a.params)) return app->value;
    if (const auto* h = std::get_if<HotkeysParam>(&a.params)) {
        std::string joined;
        for (size_t i = 0; i < h->keys.size(); ++i) {
            if (i) joined.push_back('+');
            joined += h->keys[i];
        }
        return joined;
    }
    return std::nullopt;
}

}  // namespace

EnvState Environment::step(const EnvState& state, const Action& action) const {
    if (state.terminated) throw EnvError("step: episode already terminated");
    if (auto err = validate_action(action, def_.platform))
        throw EnvError("step: " + err->message);

    EnvState next = state;
    const Screen& scr = screen(state.screen_id);

    if (action.type == ActionType::terminate) {
        next.terminated = true;
        next.terminate_reason = std::get<ReasonParam>(action.params).value;
        return next;
    }

    if (auto pt = location_of(action)) {
        if (!in_screen(def_.dims, *pt)) return next;  // off-screen tap, no-op
        auto element = hit_test(scr, *pt);
        if (!element) return next;
        const Transition* t = find_transition(state.screen_id, element, action.type, std::nullopt);
        if (!t) return next;
        next.screen_id = t->to_screen;
        next.flags.insert(t->set_flags.begin(), t->set_flags.end());
        return next;
    }

    if (action.type == ActionType::textentry) {
        if (scr.focus) {
            next.buffers[state.screen_id + "/" + *scr.focus] +=
                std::get<TextParam>(action.params).value;
        }
        return next;
    }

    const Transition* t =
        find_transition(state.screen_id, std::nullopt, action.type, param_pattern(action));
    if (!t) return next;
    next.screen_id = t->to_screen;
    next.flags.insert(t->set_flags.begin(), t->set_flags.end());
    return next;
}

Observation Environment::observe(const Task& task, const EnvState& state,
                                 const std::vector<std::string>& history) const {
    const Screen& scr = screen(state.screen_id);
    ElementsScreenView view;
    view.screen_id = scr.id;
    view.dims = def_.dims;
    for (const Element& e : scr.elements)
        view.elements.push_back(ElementView{e.id, e.bbox, e.role, e.label, e.z_order});
    Observation obs;
    obs.screen = std::move(view);
    obs.instruction = task.goal;
    obs.history = history;
    return obs;
}

uint64_t Environment::observation_digest(const Task& task, const std::string& screen_id) const {
    const Screen& scr = screen(screen_id);
    std::string blob = task.id + "|" + task.goal + "|" + scr.id;
    for (const Element& e : scr.elements) {
        blob += "|" + e.id + "," + std::to_string(e.bbox.x_min) + "," +
                std::to_string(e.bbox.y_min) + "," + std::to_string(e.bbox.x_max) + "," +
                std::to_string(e.bbox.y_max) + "," + e.label;
    }
    return fnv1a64(blob);
}

EpisodeResult run_episode(Policy& policy, const Environment& env, const Task& task,
                          int max_steps) {
    if (max_steps < 1) throw std::invalid_argument("run_episode: max_steps must be >= 1");

    EpisodeResult result;
    result.trajectory.task_id = task.id;
    EnvState state = env.initial_state(task);
    std::vector<std::string> history;

    for (int step = 0; step < max_steps && !state.terminated; ++step) {
        const Observation obs = env.observe(task, state, history);
        const auto texts = policy.generate(obs, 1, 1.0);
        const std::string& raw = texts.at(0);

        TrajectoryStep rec;
        rec.obs_digest = env.observation_digest(task, state.screen_id);
        rec.raw_output = raw;

        auto cand = extract_candidate(raw);
        if (ok(cand)) {
            rec.candidate = value(cand);
            const Action& action = rec.candidate->action;
            if (!validate_action(action, env.definition().platform)) {
                state = env.step(state, action);
                history.push_back(serialize_action(action));
            }
            // platform-invalid actions are a no-op that still consumes the step
        }
        rec.result_screen = state.screen_id;
        result.trajectory.steps.push_back(std::move(rec));
    }

    result.trajectory.terminal = true;
    result.trajectory.success = env.succeeded(task, state);
    result.final_state = state;
    return result;
}

SuccessReport success_rate(const PolicyFactory& make_policy, const Environment& env,
                           const std::vector<Task>& tasks, const EvalConfig& cfg) {
    if (tasks.empty()) throw std::invalid_argument("success_rate: no tasks");
    if (cfg.max_steps < 1 || cfg.runs < 1)
        throw std::invalid_argument("success_rate: max_steps and runs must be >= 1");

    SuccessReport report;
    for (int run = 0; run < cfg.runs; ++run) {
        auto policy = make_policy(cfg.seed + static_cast<uint64_t>(run));
        int successes = 0;
        for (const Task& task : tasks) {
            const auto episode = run_episode(*policy, env, task, cfg.max_steps);
            successes += episode.trajectory.success ? 1 : 0;
        }
        report.per_run.push_back(static_cast<double>(successes) /
                                 static_cast<double>(tasks.size()));
    }
    double sum = 0.0;
    for (double v : report.per_run) sum += v;
    report.mean = sum / static_cast<double>(report.per_run.size());
    return report;
}

bool replay_succeeds(const Environment& env, const Task& task, const Trajectory& traj) {
    EnvState state = env.initial_state(task);
    for (const TrajectoryStep& step : traj.steps) {
        if (!step.candidate) continue;  // malformed output changed nothing
        if (state.terminated) return false;
        if (validate_action(step.candidate->action, env.definition().platform)) continue;
        state = env.step(state, step.candidate->action);
    }
    return env.succeeded(task, state);
}

// ---------------------------------------------------------------------------
// BFS solver

namespace {

std::string state_key(const EnvState& st) {
    std::string key = st.screen_id;
    for (const auto& f : st.flags) key += "|" + f;
    return key;
}

}  // namespace

std::optional<std::vector<Action>> solve(const Environment& env, const EnvState& from,
                                         const SuccessPredicate& goal, int max_depth) {
    if (env.evaluate(goal, from)) return std::vector<Action>{};

    struct Node {
        EnvState state;
        std::vector<Action> path;
    };
    std::deque<Node> queue;
    std::set<std::string> visited;
    queue.push_back({from, {}});
    visited.insert(state_key(from));

    while (!queue.empty()) {
        Node node = std::move(queue.front());
        queue.pop_front();
        if (static_cast<int>(node.path.size()) >= max_depth) continue;

        // candidate actions: element transitions via their centers, plus
        // non-location transition entries on this screen
        std::vector<Action> actions;
        for (const Transition& t : env.definition().transitions) {
            if (t.screen != node.state.screen_id) continue;
            if (t.element) {
                const Screen& scr = env.screen(t.screen);
                for (const Element& e : scr.elements) {
                    if (e.id != *t.element) continue;
                    actions.push_back(Action{t.on_action, bbox_center(e.bbox)});
                }
            } else {
                switch (spec_of(t.on_action).signature) {
                    case ParamSignature::direction:
                        if (t.param)
                            if (auto d = direction_from_string(*t.param))
                                actions.push_back(Action{t.on_action, *d});
                        break;
                    case ParamSignature::app_name:
                        if (t.param)
                            actions.push_back(Action{t.on_action, AppNameParam{*t.param}});
                        break;
                    case ParamSignature::hotkeys:
                        if (t.param) {
                            HotkeysParam keys;
                            std::string cur;
                            for (char c : *t.param) {
                                if (c == '+') {
                                    keys.keys.push_back(cur);
                                    cur.clear();
                                } else {
                                    cur.push_back(c);
                                }
                            }
                            keys.keys.push_back(cur);
                            actions.push_back(Action{t.on_action, keys});
                        }
                        break;
                    case ParamSignature::none:
                        actions.push_back(Action{t.on_action, std::monostate{}});
                        break;
                    default:
                        break;
                }
            }
        }

        for (const Action& action : actions) {
            EnvState next = env.step(node.state, action);
            const std::string key = state_key(next);
            if (visited.count(key)) continue;
            visited.insert(key);
            auto path = node.path;
            path.push_back(action);
            if (env.evaluate(goal, next)) return path;
            queue.push_back({std::move(next), std::move(path)});
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// env.v1 JSON

namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool found = false;
        for (const char* k : known)
            if (it.key() == k) found = true;
        if (!found) throw EnvError("env.v1: unknown field \"" + it.key() + "\" in " + where);
    }
}

ordered_json predicate_to_json(const SuccessPredicate& p) {
    ordered_json j;
    switch (p.kind) {
        case SuccessPredicate::Kind::screen_is:
            j["type"] = "screen_is";
            j["screen"] = p.screen;
            break;
        case SuccessPredicate::Kind::flag_set:
            j["type"] = "flag_set";
            j["flag"] = p.flag;
            break;
        case SuccessPredicate::Kind::buffer_equals:
            j["type"] = "buffer_equals";
            j["screen"] = p.screen;
            j["element"] = p.element;
            j["value"] = p.value;
            break;
        case SuccessPredicate::Kind::all_of: {
            j["type"] = "all_of";
            ordered_json children = ordered_json::array();
            for (const auto& c : p.children) children.push_back(predicate_to_json(c));
            j["children"] = children;
            break;
        }
    }
    return j;
}

SuccessPredicate predicate_from_json(const ordered_json& j) {
    if (!j.is_object() || !j.contains("type"))
        throw EnvError("env.v1: predicate must be an object with a type");
    SuccessPredicate p;
    const std::string type = j.at("type").get<std::string>();
    if (type == "screen_is") {
        reject_unknown(j, {"type", "screen"}, "predicate");
        p.kind = SuccessPredicate::Kind::screen_is;
        p.screen = j.at("screen").get<std::string>();
    } else if (type == "flag_set") {
        reject_unknown(j, {"type", "flag"}, "predicate");
        p.kind = SuccessPredicate::Kind::flag_set;
        p.flag = j.at("flag").get<std::string>();
    } else if (type == "buffer_equals") {
        reject_unknown(j, {"type", "screen", "element", "value"}, "predicate");
        p.kind = SuccessPredicate::Kind::buffer_equals;
        p.screen = j.at("screen").get<std::string>();
        p.element = j.at("element").get<std::string>();
        p.value = j.at("value").get<std::string>();
    } else if (type == "all_of") {
        reject_unknown(j, {"type", "children"}, "predicate");
        p.kind = SuccessPredicate::Kind::all_of;
        for (const auto& c : j.at("children")) p.children.push_back(predicate_from_json(c));
    } else {
        throw EnvError("env.v1: unknown predicate type " + type);
    }
    return p;
}

}  // namespace

std::string env_to_json(const EnvDefinition& def) {
    ordered_json j;
    j["schema_version"] = "env.v1";
    j["name"] = def.name;
    j["platform"] = std::string(to_string(def.platform));
    j["dims"] = {{"width", def.dims.width}, {"height", def.dims.height}};
    j["screens"] = ordered_json::array();
    for (const Screen& s : def.screens) {
        ordered_json js;
        js["id"] = s.id;
        js["elements"] = ordered_json::array();
        for (const Element& e : s.elements) {
            js["elements"].push_back(
                {{"id", e.id},
                 {"bbox", {e.bbox.x_min, e.bbox.y_min, e.bbox.x_max, e.bbox.y_max}},
                 {"role", e.role},
                 {"label", e.label},
                 {"z", e.z_order}});
        }
        if (s.focus) js["focus"] = *s.focus;
        j["screens"].push_back(js);
    }
    j["transitions"] = ordered_json::array();
    for (const Transition& t : def.transitions) {
        ordered_json jt;
        jt["screen"] = t.screen;
        if (t.element) jt["element"] = *t.element;
        jt["action"] = std::string(spec_of(t.on_action).name);
        if (t.param) jt["param"] = *t.param;
        jt["to"] = t.to_screen;
        if (!t.set_flags.empty()) jt["set_flags"] = t.set_flags;
        j["transitions"].push_back(jt);
    }
    j["tasks"] = ordered_json::array();
    for (const Task& t : def.tasks) {
        ordered_json jt;
        jt["id"] = t.id;
        jt["goal"] = t.goal;
        jt["initial_screen"] = t.initial_screen;
        jt["success"] = predicate_to_json(t.success);
        jt["difficulty"] = t.difficulty;
        j["tasks"].push_back(jt);
    }
    return j.dump(2) + "\n";
}

EnvDefinition load_env_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw EnvError("env.v1: malformed JSON");
    if (!j.is_object()) throw EnvError("env.v1: top level must be an object");
    reject_unknown(j, {"schema_version", "name", "platform", "dims", "screens", "transitions",
                       "tasks"},
                   "document");
    if (!j.contains("schema_version") || j.at("schema_version") != "env.v1")
        throw EnvError("env.v1: missing or mismatched schema_version");

    EnvDefinition def;
    def.name = j.value("name", "");
    auto platform = platform_from_string(j.at("platform").get<std::string>());
    if (!platform) throw EnvError("env.v1: unknown platform");
    def.platform = *platform;
    reject_unknown(j.at("dims"), {"width", "height"}, "dims");
    def.dims = ScreenDims{j.at("dims").at("width").get<int64_t>(),
                          j.at("dims").at("height").get<int64_t>()};

    for (const auto& js : j.at("screens")) {
        reject_unknown(js, {"id", "elements", "focus"}, "screen");
        Screen s;
        s.id = js.at("id").get<std::string>();
        for (const auto& je : js.at("elements")) {
            reject_unknown(je, {"id", "bbox", "role", "label", "z"}, "element");
            Element e;
            e.id = je.at("id").get<std::string>();
            const auto& bb = je.at("bbox");
            if (!bb.is_array() || bb.size() != 4)
                throw EnvError("env.v1: element bbox must be [x_min, y_min, x_max, y_max]");
            e.bbox = BBox{bb[0].get<int64_t>(), bb[1].get<int64_t>(), bb[2].get<int64_t>(),
                          bb[3].get<int64_t>()};
            e.role = je.value("role", "");
            e.label = je.value("label", "");
            e.z_order = je.value("z", 0);
            s.elements.push_back(std::move(e));
        }
        if (js.contains("focus")) s.focus = js.at("focus").get<std::string>();
        def.screens.push_back(std::move(s));
    }

    for (const auto& jt : j.at("transitions")) {
        reject_unknown(jt, {"screen", "element", "action", "param", "to", "set_flags"},
                       "transition");
        Transition t;
        t.screen = jt.at("screen").get<std::string>();
        if (jt.contains("element")) t.element = jt.at("element").get<std::string>();
        auto type = action_type_from_name(jt.at("action").get<std::string>());
        if (!type) throw EnvError("env.v1: unknown action in transition");
        t.on_action = *type;
        if (jt.contains("param")) t.param = jt.at("param").get<std::string>();
        t.to_screen = jt.at("to").get<std::string>();
        if (jt.contains("set_flags"))
            t.set_flags = jt.at("set_flags").get<std::vector<std::string>>();
        def.transitions.push_back(std::move(t));
    }

    for (const auto& jt : j.at("tasks")) {
        reject_unknown(jt, {"id", "goal", "initial_screen", "success", "difficulty"}, "task");
        Task t;
        t.id = jt.at("id").get<std::string>();
        t.goal = jt.at("goal").get<std::string>();
        t.initial_screen = jt.at("initial_screen").get<std::string>();
        t.success = predicate_from_json(jt.at("success"));
        t.difficulty = jt.value("difficulty", 1);
        def.tasks.push_back(std::move(t));
    }
    return def;
}

EnvDefinition load_env_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EnvError("cannot open env file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_env_json(buf.str());
}

}  // namespace guire
