#include "aspecteval/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aspecteval/jsonl.hpp"

namespace aspecteval::taxonomy {

namespace {

constexpr std::string_view kDagger = "†";  // †
constexpr std::string_view kStar = "*";

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string to_string(Qualifier q) {
    switch (q) {
        case Qualifier::None: return "none";
        case Qualifier::Dagger: return "dagger";
        case Qualifier::Star: return "star";
    }
    throw std::logic_error("bad qualifier");
}

std::string to_string(Modality m) {
    switch (m) {
        case Modality::Text: return "text";
        case Modality::Image: return "image";
        case Modality::MultiImage: return "multi_image";
        case Modality::TextWithImage: return "text_with_image";
        case Modality::All: return "all";
    }
    throw std::logic_error("bad modality");
}

std::string to_string(TaskType t) {
    switch (t) {
        case TaskType::NLG: return "nlg";
        case TaskType::IU: return "iu";
        case TaskType::IG: return "ig";
        case TaskType::ITIG: return "itig";
    }
    throw std::logic_error("bad task type");
}

std::string to_string(AspectKind k) {
    return k == AspectKind::Universal ? "universal" : "task_specific";
}

Qualifier qualifier_from_string(std::string_view s) {
    if (s == "none") return Qualifier::None;
    if (s == "dagger") return Qualifier::Dagger;
    if (s == "star") return Qualifier::Star;
    throw std::invalid_argument("unknown qualifier: " + std::string(s));
}

Modality modality_from_string(std::string_view s) {
    if (s == "text") return Modality::Text;
    if (s == "image") return Modality::Image;
    if (s == "multi_image") return Modality::MultiImage;
    if (s == "text_with_image") return Modality::TextWithImage;
    if (s == "all") return Modality::All;
    throw std::invalid_argument("unknown modality: " + std::string(s));
}

TaskType task_type_from_string(std::string_view s) {
    if (s == "nlg") return TaskType::NLG;
    if (s == "iu") return TaskType::IU;
    if (s == "ig") return TaskType::IG;
    if (s == "itig") return TaskType::ITIG;
    throw std::invalid_argument("unknown task type: " + std::string(s));
}

AspectKind aspect_kind_from_string(std::string_view s) {
    if (s == "universal") return AspectKind::Universal;
    if (s == "task_specific") return AspectKind::TaskSpecific;
    throw std::invalid_argument("unknown aspect kind: " + std::string(s));
}

std::string AspectId::key() const {
    switch (qualifier) {
        case Qualifier::None: return name;
        case Qualifier::Dagger: return name + std::string(kDagger);
        case Qualifier::Star: return name + std::string(kStar);
    }
    throw std::logic_error("bad qualifier");
}

AspectId AspectId::parse(std::string_view key) {
    if (ends_with(key, kDagger))
        return {std::string(key.substr(0, key.size() - kDagger.size())), Qualifier::Dagger};
    if (ends_with(key, kStar))
        return {std::string(key.substr(0, key.size() - kStar.size())), Qualifier::Star};
    return {std::string(key), Qualifier::None};
}

AspectRegistry AspectRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw jsonl::ParseError("cannot open " + path.string(), 0);
    return load(in, path.string());
}

AspectRegistry AspectRegistry::load(std::istream& in, const std::string& origin) {
    AspectRegistry reg;
    bool saw_header = false;
    std::size_t expect_total = 0, expect_ua = 0, expect_ta = 0, expect_st = 0;

    auto req = [&](const nlohmann::json& rec, const char* field, std::size_t line) -> const nlohmann::json& {
        auto it = rec.find(field);
        if (it == rec.end())
            throw jsonl::ParseError(std::string("missing field \"") + field + "\"", line);
        return *it;
    };

    jsonl::for_each_record(in, [&](const nlohmann::json& rec, std::size_t line) {
        std::string kind = req(rec, "kind", line).get<std::string>();
        try {
            if (kind == "header") {
                if (saw_header) throw IntegrityError("duplicate header record");
                saw_header = true;
                expect_total = req(rec, "aspects", line).get<std::size_t>();
                expect_ua = req(rec, "universal", line).get<std::size_t>();
                expect_ta = req(rec, "task_specific", line).get<std::size_t>();
                expect_st = req(rec, "sub_tasks", line).get<std::size_t>();
            } else if (kind == "subtask") {
                SubTask st;
                st.id = req(rec, "id", line).get<std::string>();
                st.task = task_type_from_string(req(rec, "task", line).get<std::string>());
                st.output = modality_from_string(req(rec, "output", line).get<std::string>());
                if (reg.sub_task_index_.count(st.id))
                    throw IntegrityError("duplicate sub-task id: " + st.id);
                reg.sub_task_index_[st.id] = reg.sub_tasks_.size();
                reg.sub_tasks_.push_back(std::move(st));
            } else if (kind == "aspect") {
                Aspect a;
                a.id.name = req(rec, "name", line).get<std::string>();
                a.id.qualifier = qualifier_from_string(req(rec, "qualifier", line).get<std::string>());
                a.abbreviation = req(rec, "abbr", line).get<std::string>();
                a.kind = aspect_kind_from_string(req(rec, "category", line).get<std::string>());
                a.definition = req(rec, "definition", line).get<std::string>();
                const auto& parent = req(rec, "parent", line);
                if (!parent.is_null()) a.parent = AspectId::parse(parent.get<std::string>());
                if (a.kind == AspectKind::Universal) {
                    for (const auto& t : req(rec, "targets", line))
                        a.targets.insert(modality_from_string(t.get<std::string>()));
                } else {
                    for (const auto& s : req(rec, "sub_tasks", line))
                        a.sub_tasks.push_back(s.get<std::string>());
                }
                a.selectable = req(rec, "selectable", line).get<bool>();
                a.structural = req(rec, "structural", line).get<bool>();
                a.parent_inferred = rec.value("parent_inferred", false);
                a.order = reg.aspects_.size();
                if (reg.by_id_.count(a.id))
                    throw IntegrityError("duplicate aspect id: " + a.id.key());
                reg.by_id_[a.id] = a.order;
                reg.by_name_[a.id.name].push_back(a.order);
                reg.by_abbr_[a.abbreviation].push_back(a.order);
                reg.aspects_.push_back(std::move(a));
            } else {
                throw jsonl::ParseError("unknown record kind \"" + kind + "\"", line);
            }
        } catch (const nlohmann::json::exception& e) {
            throw jsonl::ParseError(std::string("bad field type: ") + e.what(), line);
        }
    });

    if (!saw_header)
        throw IntegrityError(origin + ": registry header record missing");
    reg.validate(expect_total, expect_ua, expect_ta, expect_st);
    return reg;
}

void AspectRegistry::validate(std::size_t expect_total, std::size_t expect_universal,
                              std::size_t expect_task_specific, std::size_t expect_sub_tasks) {
    std::size_t n_ua = 0, n_ta = 0;
    const Aspect* root = nullptr;

    for (const Aspect& a : aspects_) {
        if (a.definition.empty())
            throw IntegrityError("empty definition: " + a.id.key());
        if (!a.parent) {
            if (root) throw IntegrityError("multiple root aspects: " + root->id.key() +
                                           ", " + a.id.key());
            root = &a;
        } else if (!by_id_.count(*a.parent)) {
            throw IntegrityError("dangling parent \"" + a.parent->key() + "\" on " + a.id.key());
        }
        if (a.id.qualifier != Qualifier::None && by_name_.at(a.id.name).size() < 2)
            throw IntegrityError("marker on uncontested name: " + a.id.key());
        if (!a.structural) {
            if (a.kind == AspectKind::Universal) {
                ++n_ua;
                if (a.targets.empty())
                    throw IntegrityError("universal aspect without targets: " + a.id.key());
            } else {
                ++n_ta;
                if (a.sub_tasks.empty())
                    throw IntegrityError("task-specific aspect without sub-tasks: " + a.id.key());
            }
        }
        for (const SubTaskId& st : a.sub_tasks)
            if (!sub_task_index_.count(st))
                throw IntegrityError("unregistered sub-task \"" + st + "\" on " + a.id.key());
        if (a.parent) children_[*a.parent].push_back(a.order);
    }

    if (!root) throw IntegrityError("no root aspect");
    overall_ = root->id;
    aspect_count_ = n_ua + n_ta;

    // Cycle check: every parent walk must reach the root.
    for (const Aspect& a : aspects_) {
        std::set<AspectId> seen;
        const Aspect* cur = &a;
        while (cur->parent) {
            if (!seen.insert(cur->id).second)
                throw IntegrityError("parent cycle through " + cur->id.key());
            cur = &aspects_[by_id_.at(*cur->parent)];
        }
        if (cur->id != overall_)
            throw IntegrityError("aspect not rooted at " + overall_.key() + ": " + a.id.key());
    }

    auto top = children_.find(overall_);
    if (top == children_.end() || top->second.size() != 2)
        throw IntegrityError("root must have exactly two children");
    for (std::size_t i : top->second) {
        const Aspect& c = aspects_[i];
        (c.kind == AspectKind::Universal ? ua_root_ : ta_root_) = c.id;
    }
    if (ua_root_ == AspectId{} || ta_root_ == AspectId{} || ua_root_ == ta_root_)
        throw IntegrityError("root children must be one universal and one task-specific subtree");

    if (aspect_count_ != expect_total)
        throw IntegrityError("aspect count " + std::to_string(aspect_count_) +
                             " does not match header " + std::to_string(expect_total));
    if (n_ua != expect_universal)
        throw IntegrityError("universal count " + std::to_string(n_ua) +
                             " does not match header " + std::to_string(expect_universal));
    if (n_ta != expect_task_specific)
        throw IntegrityError("task-specific count " + std::to_string(n_ta) +
                             " does not match header " + std::to_string(expect_task_specific));
    if (sub_tasks_.size() != expect_sub_tasks)
        throw IntegrityError("sub-task count " + std::to_string(sub_tasks_.size()) +
                             " does not match header " + std::to_string(expect_sub_tasks));
}

const Aspect& AspectRegistry::at(const AspectId& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw NotFound("no aspect " + id.key());
    return aspects_[it->second];
}

bool AspectRegistry::contains(const AspectId& id) const { return by_id_.count(id) > 0; }

const Aspect& AspectRegistry::resolve(std::string_view key) const {
    AspectId id = AspectId::parse(key);
    if (id.qualifier != Qualifier::None) {
        if (auto it = by_id_.find(id); it != by_id_.end()) return aspects_[it->second];
        // marked abbreviations ("Acc*") carry the marker inside the abbreviation
        if (auto it = by_abbr_.find(std::string(key));
            it != by_abbr_.end() && it->second.size() == 1)
            return aspects_[it->second.front()];
        throw NotFound("no aspect " + id.key());
    }

    std::vector<std::size_t> candidates;
    if (auto it = by_name_.find(id.name); it != by_name_.end())
        candidates = it->second;
    if (auto it = by_abbr_.find(std::string(key)); it != by_abbr_.end())
        for (std::size_t i : it->second)
            if (std::find(candidates.begin(), candidates.end(), i) == candidates.end())
                candidates.push_back(i);

    if (candidates.empty()) throw NotFound("no aspect matching \"" + std::string(key) + "\"");
    if (candidates.size() > 1) {
        std::sort(candidates.begin(), candidates.end());
        std::string msg = "\"" + std::string(key) + "\" is ambiguous:";
        for (std::size_t i : candidates) msg += " " + aspects_[i].id.key();
        throw Ambiguous(msg);
    }
    return aspects_[candidates.front()];
}

std::vector<AspectId> AspectRegistry::select_universal(Modality modality) const {
    std::vector<AspectId> out;
    for (const Aspect& a : aspects_) {
        if (a.kind != AspectKind::Universal || !a.selectable) continue;
        if (a.targets.count(modality) || a.targets.count(Modality::All))
            out.push_back(a.id);
    }
    return out;
}

std::vector<AspectId> AspectRegistry::select_task_specific(const SubTaskId& sub_task) const {
    if (!sub_task_index_.count(sub_task))
        throw UnknownSubTask("unknown sub-task: " + sub_task);
    std::vector<AspectId> out;
    for (const Aspect& a : aspects_) {
        if (a.kind != AspectKind::TaskSpecific || !a.selectable) continue;
        if (std::find(a.sub_tasks.begin(), a.sub_tasks.end(), sub_task) != a.sub_tasks.end())
            out.push_back(a.id);
    }
    return out;
}

std::vector<AspectId> AspectRegistry::traverse(const AspectId& root, TraverseMode mode) const {
    return mode == TraverseMode::Subtree ? subtree(root) : ancestors(root);
}

std::vector<AspectId> AspectRegistry::subtree(const AspectId& root) const {
    at(root);  // throws NotFound
    std::vector<AspectId> out;
    std::vector<AspectId> stack{root};
    while (!stack.empty()) {
        AspectId cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        auto it = children_.find(cur);
        if (it == children_.end()) continue;
        for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit)
            stack.push_back(aspects_[*rit].id);
    }
    return out;
}

std::vector<AspectId> AspectRegistry::ancestors(const AspectId& id) const {
    const Aspect* cur = &at(id);
    std::vector<AspectId> out{cur->id};
    while (cur->parent) {
        cur = &aspects_[by_id_.at(*cur->parent)];
        out.push_back(cur->id);
    }
    return out;
}

const SubTask& AspectRegistry::sub_task(const SubTaskId& id) const {
    auto it = sub_task_index_.find(id);
    if (it == sub_task_index_.end()) throw UnknownSubTask("unknown sub-task: " + id);
    return sub_tasks_[it->second];
}

bool AspectRegistry::has_sub_task(const SubTaskId& id) const {
    return sub_task_index_.count(id) > 0;
}

}  // namespace aspecteval::taxonomy
