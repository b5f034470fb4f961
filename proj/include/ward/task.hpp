#pragma once

#include <string_view>

namespace ward {

// The two generation targets: brief hospital course and discharge
// instructions.
enum class Task { bhc, di };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);

// Canonical section name the task produces.
std::string_view task_section_name(Task task);

}  // namespace ward
