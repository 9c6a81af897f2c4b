"""jQuery functions understood by the script translation.

Each supported function maps to how it changes the matched-set stack. After a
name missing from both tables the rest of the chain runs on ``true``, with a
warning.
"""

from enum import StrEnum


class JQueryKind(StrEnum):
    KEEP = "keep"
    PUSH_TOP = "push_top"
    END = "end"
    ADD_BACK = "add_back"
    ADD_CLASS = "add_class"
    TRAVERSE = "traverse"
    FRAGMENT = "fragment"
    HANDLER = "handler"
    AJAX = "ajax"
    EACH = "each"
    HOVER = "hover"
    ON = "on"


JQUERY_FUNCTIONS: dict[str, JQueryKind] = {
    # selection unchanged
    "animate": JQueryKind.KEEP,
    "data": JQueryKind.KEEP,
    "fadeIn": JQueryKind.KEEP,
    "fadeOut": JQueryKind.KEEP,
    "show": JQueryKind.KEEP,
    "slideUp": JQueryKind.KEEP,
    "slideDown": JQueryKind.KEEP,
    "stop": JQueryKind.KEEP,
    # removals are not modeled
    "remove": JQueryKind.KEEP,
    "removeClass": JQueryKind.KEEP,
    # narrowing calls approximated by the current selection
    "eq": JQueryKind.PUSH_TOP,
    "filter": JQueryKind.PUSH_TOP,
    "first": JQueryKind.PUSH_TOP,
    "not": JQueryKind.PUSH_TOP,
    "val": JQueryKind.PUSH_TOP,
    "end": JQueryKind.END,
    "addBack": JQueryKind.ADD_BACK,
    "addClass": JQueryKind.ADD_CLASS,
    "children": JQueryKind.TRAVERSE,
    "closest": JQueryKind.TRAVERSE,
    "find": JQueryKind.TRAVERSE,
    "has": JQueryKind.TRAVERSE,
    "next": JQueryKind.TRAVERSE,
    "nextAll": JQueryKind.TRAVERSE,
    "prev": JQueryKind.TRAVERSE,
    "prevAll": JQueryKind.TRAVERSE,
    "parent": JQueryKind.TRAVERSE,
    "parents": JQueryKind.TRAVERSE,
    "append": JQueryKind.FRAGMENT,
    "html": JQueryKind.FRAGMENT,
    "prepend": JQueryKind.FRAGMENT,
    "bind": JQueryKind.HANDLER,
    "blur": JQueryKind.HANDLER,
    "click": JQueryKind.HANDLER,
    "change": JQueryKind.HANDLER,
    "focus": JQueryKind.HANDLER,
    "keyup": JQueryKind.HANDLER,
    "ready": JQueryKind.HANDLER,
    "resize": JQueryKind.HANDLER,
    "submit": JQueryKind.HANDLER,
    "ajax": JQueryKind.AJAX,
    "each": JQueryKind.EACH,
    "hover": JQueryKind.HOVER,
    "on": JQueryKind.ON,
}

# Functions returning something other than a jQuery object, without DOM effects
IGNORED_FUNCTIONS: frozenset[str] = frozenset({"extend", "hasClass", "height", "is", "width"})

JQUERY_NAMES: frozenset[str] = frozenset({"$", "jQuery"})

# Objects whose selection is the whole document
DOCUMENT_OBJECTS: frozenset[str] = frozenset({"document", "window"})
