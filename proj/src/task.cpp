#include "ward/task.hpp"

#include "ward/error.hpp"

namespace ward {

std::string_view task_name(Task task) {
    return task == Task::bhc ? "bhc" : "di";
}

std::string_view task_section_name(Task task) {
    return task == Task::bhc ? "brief_hospital_course" : "discharge_instructions";
}

Task parse_task(std::string_view name) {
    if (name == "bhc") return Task::bhc;
    if (name == "di") return Task::di;
    raise(ErrorKind::validation, "unknown task: " + std::string(name) + " (expected bhc or di)");
}

}  // namespace ward
