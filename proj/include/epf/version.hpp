#pragma once

#define EPF_VERSION "0.1.0"
