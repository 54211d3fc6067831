#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aspecteval::taxonomy {

enum class Qualifier { None, Dagger, Star };
enum class Modality { Text, Image, MultiImage, TextWithImage, All };
enum class TaskType { NLG, IU, IG, ITIG };
enum class AspectKind { Universal, TaskSpecific };
enum class TraverseMode { Subtree, Ancestors };

std::string to_string(Qualifier q);
std::string to_string(Modality m);
std::string to_string(TaskType t);
std::string to_string(AspectKind k);
Qualifier qualifier_from_string(std::string_view s);
Modality modality_from_string(std::string_view s);
TaskType task_type_from_string(std::string_view s);
AspectKind aspect_kind_from_string(std::string_view s);

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Ambiguous : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownSubTask : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Aspect identity: a name plus an optional disambiguating marker.
/// Rendered as "Name", "Name†", or "Name*".
struct AspectId {
    std::string name;
    Qualifier qualifier = Qualifier::None;

    std::string key() const;
    static AspectId parse(std::string_view key);

    auto operator<=>(const AspectId&) const = default;
};

using SubTaskId = std::string;

struct Aspect {
    AspectId id;
    std::string abbreviation;
    AspectKind kind = AspectKind::Universal;
    std::string definition;
    std::optional<AspectId> parent;     // absent only for the root
    std::set<Modality> targets;         // Universal aspects
    std::vector<SubTaskId> sub_tasks;   // TaskSpecific aspects
    bool selectable = true;
    bool structural = false;            // grouping node, not one of the 112
    bool parent_inferred = false;
    std::size_t order = 0;              // position in the registry file
};

struct SubTask {
    SubTaskId id;
    TaskType task = TaskType::NLG;
    Modality output = Modality::Text;
};

/// The validated aspect tree plus the sub-task table. Immutable after load;
/// safe for concurrent reads.
class AspectRegistry {
public:
    static AspectRegistry load(const std::filesystem::path& path);
    static AspectRegistry load(std::istream& in, const std::string& origin = "<stream>");

    const Aspect& at(const AspectId& id) const;
    bool contains(const AspectId& id) const;

    /// Looks up by name (with optional marker suffix) or abbreviation.
    const Aspect& resolve(std::string_view key) const;

    /// Universal aspects applicable to an output modality, registry order.
    std::vector<AspectId> select_universal(Modality modality) const;

    /// Task-specific aspects bound to a sub-task, registry order.
    std::vector<AspectId> select_task_specific(const SubTaskId& sub_task) const;

    std::vector<AspectId> traverse(const AspectId& root, TraverseMode mode) const;
    std::vector<AspectId> subtree(const AspectId& root) const;
    std::vector<AspectId> ancestors(const AspectId& id) const;

    const SubTask& sub_task(const SubTaskId& id) const;
    bool has_sub_task(const SubTaskId& id) const;

    const std::vector<Aspect>& aspects() const { return aspects_; }
    const std::vector<SubTask>& sub_tasks() const { return sub_tasks_; }

    /// Distinct aspects excluding structural grouping nodes.
    std::size_t aspect_count() const { return aspect_count_; }

    const AspectId& overall() const { return overall_; }
    const AspectId& universal_root() const { return ua_root_; }
    const AspectId& task_specific_root() const { return ta_root_; }

private:
    AspectRegistry() = default;
    void validate(std::size_t expect_total, std::size_t expect_universal,
                  std::size_t expect_task_specific, std::size_t expect_sub_tasks);

    std::vector<Aspect> aspects_;
    std::vector<SubTask> sub_tasks_;
    std::map<AspectId, std::size_t> by_id_;
    std::map<std::string, std::vector<std::size_t>> by_name_;
    std::map<std::string, std::vector<std::size_t>> by_abbr_;
    std::map<SubTaskId, std::size_t> sub_task_index_;
    std::map<AspectId, std::vector<std::size_t>> children_;
    std::size_t aspect_count_ = 0;
    AspectId overall_;
    AspectId ua_root_;
    AspectId ta_root_;
};

}  // namespace aspecteval::taxonomy
