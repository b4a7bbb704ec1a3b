# Background certification tasks
