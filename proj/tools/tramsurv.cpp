#include "tramsurv/cli.hpp"

int main(int argc, char** argv) { return tramsurv::cli::main_entry(argc, argv); }
