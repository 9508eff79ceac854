#include "amfc/harness.hpp"

int main(int argc, char** argv) { return amfc::cli_main(argc, argv); }
