"""Channel model, target functions, comparative advantage and grid searches."""
