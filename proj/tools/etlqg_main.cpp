#include "etlqg/cli.hpp"

int main(int argc, char** argv) { return etlqg::cli_main(argc, argv); }
