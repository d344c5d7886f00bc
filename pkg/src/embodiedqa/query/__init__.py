"""Question compilation and relational execution."""
from .compiler import answering_program, compile_ast, planning_program, translate_question
from .engine import execute, format_answer
from .ir import QueryProgram, QueryTypeError, check_program, format_tree, to_sql
from .parser import ParseError, UnknownTokenError, parse_question
from .store import RelationalStore, build_store, dump_store, load_store
