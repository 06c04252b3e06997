"""
Graph Agents CLI Module

This module contains the single entry point behind manage.py. Lab commands
are spelled with hyphens on the command line (theory-check, generate-dataset)
and live as underscore-named management commands; Django's own commands
(migrate, test, shell) pass straight through.
"""

import json
import os
import sys

import django
from django.core.management import execute_from_command_line, get_commands, load_command_class

LAB_APP = 'graph_agents'
LAB_COMMANDS = (
    'generate-dataset', 'train', 'eval', 'grid', 'theory-check', 'fig3', 'table1', 'ablation-j',
    'agent-sweep', 'heatmap', 'grad-check', 'oracle',
)


def usage():
    lines = ['Usage: manage.py <command> [flags]', '', 'Lab commands (manage.py <command> --help for flags):']
    lines.extend(f"    {name}" for name in LAB_COMMANDS)
    lines.append('')
    lines.append("Django commands such as migrate and test are also available.")
    return '\n'.join(lines)


def _exit_code(exit):
    if exit.code is None:
        return 0
    return exit.code if isinstance(exit.code, int) else 1


def dispatch(argv):
    """
    Run one command.

    params:
        argv: Arguments after the program name, e.g. ['theory-check', '--seed', '7']

    returns:
        Process exit code: 0 on success, 1 on lab errors, 2 on usage errors
    """
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'agentnet_lab.settings')
    django.setup()
    if not argv or argv[0] in ('help', '-h', '--help'):
        sys.stdout.write(usage() + '\n')
        return 0

    name = argv[0].replace('-', '_')
    commands = get_commands()
    if name not in commands:
        sys.stderr.write(json.dumps({
            'status': 'error',
            'error': 'unknown_command',
            'message': f"Unknown command '{argv[0]}'",
            'details': {'commands': list(LAB_COMMANDS)},
        }, sort_keys=True) + '\n')
        return 2

    try:
        if commands[name] == LAB_APP:
            load_command_class(LAB_APP, name).run_from_argv(['manage.py', name, *argv[1:]])
        else:
            execute_from_command_line(['manage.py', name, *argv[1:]])
    except SystemExit as exit:
        return _exit_code(exit)
    return 0
