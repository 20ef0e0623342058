#include "qmoney/cli.hpp"

int main(int argc, char** argv) { return qmoney::cli::main_entry(argc, argv); }
