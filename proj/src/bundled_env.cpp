#include "guire/envsim.hpp"

namespace guire {

namespace {

Element el(const std::string& id, int64_t x, int64_t y, int64_t w, int64_t h,
           const std::string& role, const std::string& label, int z = 0) {
    return Element{id, BBox{x, y, x + w, y + h}, role, label, z};
}

// Launcher icons sit on a 4-column row; list rows stack below the header.
Element icon(const std::string& id, int col, const std::string& label) {
    return el(id, 80 + col * 260, 620, 160, 160, "icon", label);
}

Element row(const std::string& id, int slot, const std::string& label) {
    return el(id, 60, 280 + slot * 150, 420, 110, "row", label);
}

Element button(const std::string& id, int slot, const std::string& label) {
    return el(id, 330, 500 + slot * 170, 420, 110, "button", label);
}

SuccessPredicate on_screen(const std::string& id) {
    SuccessPredicate p;
    p.kind = SuccessPredicate::Kind::screen_is;
    p.screen = id;
    return p;
}

SuccessPredicate has_flag(const std::string& flag) {
    SuccessPredicate p;
    p.kind = SuccessPredicate::Kind::flag_set;
    p.flag = flag;
    return p;
}

}  // namespace

EnvDefinition bundled_env() {
    EnvDefinition def;
    def.name = "bundled";
    def.platform = Platform::mobile;
    def.dims = ScreenDims{1080, 1920};

    auto screen = [&](const std::string& id, std::vector<Element> elements,
                      std::optional<std::string> focus = std::nullopt) {
        def.screens.push_back(Screen{id, std::move(elements), std::move(focus)});
    };
    auto tap = [&](const std::string& from, const std::string& element, const std::string& to,
                   std::vector<std::string> flags = {}) {
        def.transitions.push_back(
            Transition{from, element, ActionType::tap, std::nullopt, to, std::move(flags)});
    };
    auto swipe = [&](const std::string& from, const std::string& dir, const std::string& to) {
        def.transitions.push_back(
            Transition{from, std::nullopt, ActionType::swipe, dir, to, {}});
    };
    auto open_app = [&](const std::string& from, const std::string& app, const std::string& to) {
        def.transitions.push_back(
            Transition{from, std::nullopt, ActionType::open_app, app, to, {}});
    };
    auto back = [&](const std::string& from, const std::string& to) {
        def.transitions.push_back(
            Transition{from, std::nullopt, ActionType::navigate_back, std::nullopt, to, {}});
    };
    auto home_from = [&](const std::string& from) {
        def.transitions.push_back(
            Transition{from, std::nullopt, ActionType::navigate_home, std::nullopt, "home", {}});
    };

    // -------------------------------------------------------------- launcher
    screen("home", {el("clock", 340, 120, 400, 140, "label", "09:41"),
                    icon("icon_settings", 0, "Settings"), icon("icon_contacts", 1, "Contacts"),
                    icon("icon_notes", 2, "Notes"), icon("icon_mail", 3, "Mail")});
    screen("home_page2", {icon("icon_gallery", 0, "Gallery"), icon("icon_music", 1, "Music")});
    swipe("home", "left", "home_page2");
    swipe("home_page2", "right", "home");
    tap("home", "icon_settings", "settings");
    tap("home", "icon_contacts", "contacts");
    tap("home", "icon_notes", "notes");
    tap("home", "icon_mail", "mail");
    tap("home_page2", "icon_gallery", "gallery");
    tap("home_page2", "icon_music", "music");
    open_app("home", "Settings", "settings");
    open_app("home", "Contacts", "contacts");
    open_app("home", "Notes", "notes");
    open_app("home", "Mail", "mail");

    // -------------------------------------------------------------- settings
    screen("settings", {row("row_wifi", 0, "Wi-Fi"), row("row_display", 1, "Display"),
                        row("row_about", 2, "About phone"), row("row_system", 3, "System")});
    screen("settings_wifi", {el("toggle_wifi", 620, 300, 180, 100, "toggle", "Wi-Fi on/off"),
                             row("row_wifi_advanced", 2, "Advanced")});
    screen("settings_wifi_advanced",
           {el("toggle_static_ip", 620, 300, 180, 100, "toggle", "Static IP"),
            row("row_proxy", 2, "Proxy")});
    screen("settings_wifi_static_on", {el("lbl_static", 60, 280, 500, 110, "label",
                                          "Static IP enabled")});
    screen("settings_wifi_proxy", {button("btn_proxy_manual", 0, "Manual proxy")});
    screen("settings_wifi_proxy_manual", {button("btn_port_8080", 0, "Port 8080")});
    screen("settings_wifi_proxy_port", {button("btn_save_proxy", 0, "Save proxy")});
    screen("settings_wifi_proxy_saved", {el("lbl_proxy", 60, 280, 500, 110, "label",
                                            "Proxy configured")});
    screen("settings_display", {row("row_brightness", 0, "Brightness")});
    screen("settings_brightness", {button("btn_brighter", 0, "Increase brightness")});
    screen("settings_brightness_up", {el("lbl_brighter", 60, 280, 500, 110, "label",
                                         "Brightness increased")});
    screen("settings_about", {el("lbl_version", 60, 280, 500, 110, "label", "Version 1.0")});
    screen("settings_system", {row("row_reset", 0, "Reset options")});
    screen("settings_reset", {button("btn_reset_begin", 0, "Factory reset")});
    screen("settings_reset_c1", {button("btn_c1_yes", 0, "Continue")});
    screen("settings_reset_c2", {button("btn_c2_yes", 0, "Erase everything")});
    screen("settings_reset_progress", {button("btn_finish", 0, "Finish")});
    screen("settings_reset_done", {el("lbl_done", 60, 280, 500, 110, "label", "Device reset")});
    tap("settings", "row_wifi", "settings_wifi");
    tap("settings", "row_display", "settings_display");
    tap("settings", "row_about", "settings_about");
    tap("settings", "row_system", "settings_system");
    tap("settings_wifi", "toggle_wifi", "settings_wifi", {"wifi_toggled"});
    tap("settings_wifi", "row_wifi_advanced", "settings_wifi_advanced");
    tap("settings_wifi_advanced", "toggle_static_ip", "settings_wifi_static_on", {"static_ip_on"});
    tap("settings_wifi_advanced", "row_proxy", "settings_wifi_proxy");
    tap("settings_wifi_proxy", "btn_proxy_manual", "settings_wifi_proxy_manual");
    tap("settings_wifi_proxy_manual", "btn_port_8080", "settings_wifi_proxy_port");
    tap("settings_wifi_proxy_port", "btn_save_proxy", "settings_wifi_proxy_saved",
        {"proxy_configured"});
    tap("settings_display", "row_brightness", "settings_brightness");
    tap("settings_brightness", "btn_brighter", "settings_brightness_up", {"brightness_up"});
    tap("settings_system", "row_reset", "settings_reset");
    tap("settings_reset", "btn_reset_begin", "settings_reset_c1");
    tap("settings_reset_c1", "btn_c1_yes", "settings_reset_c2");
    tap("settings_reset_c2", "btn_c2_yes", "settings_reset_progress");
    tap("settings_reset_progress", "btn_finish", "settings_reset_done", {"factory_reset_done"});
    back("settings", "home");
    back("settings_wifi", "settings");
    back("settings_wifi_advanced", "settings_wifi");
    back("settings_display", "settings");
    back("settings_system", "settings");
    home_from("settings");

    // -------------------------------------------------------------- contacts
    screen("contacts", {button("btn_new_contact", 0, "New contact"),
                        row("row_alice", 2, "Alice Chen")});
    screen("contact_new",
           {row("row_ringtone", 0, "Ringtone"), button("btn_save_contact", 2, "Save")},
           std::nullopt);
    screen("contact_ringtone", {row("opt_chime", 0, "Chime"), row("opt_silent", 1, "Silent")});
    screen("contact_ringtone_set", {el("lbl_ringtone", 60, 280, 500, 110, "label",
                                       "Ringtone: Chime")});
    screen("contact_saved", {el("lbl_saved", 60, 280, 500, 110, "label", "Contact saved")});
    tap("contacts", "btn_new_contact", "contact_new");
    tap("contact_new", "row_ringtone", "contact_ringtone");
    tap("contact_ringtone", "opt_chime", "contact_ringtone_set", {"ringtone_chime"});
    tap("contact_new", "btn_save_contact", "contact_saved", {"contact_saved"});
    back("contacts", "home");
    back("contact_new", "contacts");
    home_from("contacts");

    // -------------------------------------------------------------- notes
    screen("notes", {button("btn_new_note", 0, "New note"), row("row_groceries", 2, "Groceries")});
    screen("note_editor",
           {el("text_area", 60, 280, 500, 110, "textfield", "Note text"),
            button("btn_format", 1, "Format")},
           "text_area");
    screen("note_format", {el("toggle_bold", 620, 300, 180, 100, "toggle", "Bold"),
                           row("row_color", 2, "Text color")});
    screen("note_format_bold", {el("lbl_bold", 60, 280, 500, 110, "label", "Bold is on")});
    screen("note_color", {row("opt_red", 0, "Red"), row("opt_blue", 1, "Blue")});
    screen("note_color_red", {button("btn_shade_dark", 0, "Dark shade")});
    screen("note_shade", {button("btn_apply_style", 0, "Apply style")});
    screen("note_styled", {el("lbl_styled", 60, 280, 500, 110, "label", "Style applied")});
    tap("notes", "btn_new_note", "note_editor");
    tap("note_editor", "btn_format", "note_format");
    tap("note_format", "toggle_bold", "note_format_bold", {"bold_on"});
    tap("note_format", "row_color", "note_color");
    tap("note_color", "opt_red", "note_color_red");
    tap("note_color_red", "btn_shade_dark", "note_shade");
    tap("note_shade", "btn_apply_style", "note_styled", {"note_styled"});
    back("notes", "home");
    back("note_editor", "notes");
    back("note_format", "note_editor");
    home_from("notes");

    // -------------------------------------------------------------- mail
    screen("mail", {row("row_inbox", 0, "Inbox"), row("row_sent", 1, "Sent")});
    screen("mail_inbox", {row("row_msg1", 0, "Quarterly report"), row("row_msg2", 1, "Lunch?")});
    screen("mail_msg", {button("btn_reply", 0, "Reply"), button("btn_forward", 1, "Forward")});
    screen("mail_reply", {button("btn_attach", 0, "Attach")},
           std::nullopt);
    screen("mail_attach", {row("tab_photos", 0, "Photos"), row("tab_files", 1, "Files")});
    screen("mail_attach_photos", {row("photo_1", 0, "IMG_0001"), row("photo_2", 1, "IMG_0002")});
    screen("mail_attach_done", {el("lbl_attached", 60, 280, 500, 110, "label", "Photo attached")});
    screen("mail_forward", {button("btn_add_recipient", 0, "Add recipient")});
    screen("mail_recipients", {row("contact_bob", 0, "Bob Park")});
    screen("mail_recipient_added", {button("btn_send_fwd", 0, "Send")});
    screen("mail_sent_screen", {el("lbl_sent", 60, 280, 500, 110, "label", "Message sent")});
    tap("mail", "row_inbox", "mail_inbox");
    tap("mail_inbox", "row_msg1", "mail_msg");
    tap("mail_msg", "btn_reply", "mail_reply");
    tap("mail_msg", "btn_forward", "mail_forward");
    tap("mail_reply", "btn_attach", "mail_attach");
    tap("mail_attach", "tab_photos", "mail_attach_photos");
    tap("mail_attach_photos", "photo_1", "mail_attach_done", {"photo_attached"});
    tap("mail_forward", "btn_add_recipient", "mail_recipients");
    tap("mail_recipients", "contact_bob", "mail_recipient_added");
    tap("mail_recipient_added", "btn_send_fwd", "mail_sent_screen", {"mail_forwarded"});
    back("mail", "home");
    back("mail_inbox", "mail");
    back("mail_msg", "mail_inbox");
    home_from("mail");

    // -------------------------------------------------------------- gallery & music
    screen("gallery", {row("album_vacation", 0, "Vacation"), row("album_food", 1, "Food")});
    screen("gallery_album", {row("photo_beach", 0, "Beach sunset")});
    screen("gallery_photo", {el("lbl_photo", 60, 280, 500, 110, "label", "Beach sunset")});
    screen("music", {row("row_playlists", 0, "Playlists"), row("row_artists", 1, "Artists")});
    screen("music_playlists", {row("pl_focus", 0, "Focus"), row("pl_party", 1, "Party")});
    screen("music_playlist_focus", {row("track_2", 0, "Track two")});
    screen("music_playing", {button("btn_queue", 0, "Queue")});
    screen("music_queue", {button("btn_clear_queue", 0, "Clear queue")});
    screen("music_queue_cleared", {el("lbl_cleared", 60, 280, 500, 110, "label", "Queue empty")});
    tap("gallery", "album_vacation", "gallery_album");
    tap("gallery_album", "photo_beach", "gallery_photo", {"viewed_beach"});
    tap("music", "row_playlists", "music_playlists");
    tap("music_playlists", "pl_focus", "music_playlist_focus", {"playlist_opened"});
    tap("music_playlist_focus", "track_2", "music_playing");
    tap("music_playing", "btn_queue", "music_queue");
    tap("music_queue", "btn_clear_queue", "music_queue_cleared", {"queue_cleared"});
    back("gallery", "home_page2");
    back("music", "home_page2");
    home_from("gallery");
    home_from("music");

    // -------------------------------------------------------------- tasks
    auto task = [&](const std::string& id, const std::string& goal, SuccessPredicate success,
                    int difficulty) {
        def.tasks.push_back(Task{id, goal, "home", std::move(success), difficulty});
    };
    task("t01", "Open the Wi-Fi settings page", on_screen("settings_wifi"), 1);
    task("t02", "Open the display settings page", on_screen("settings_display"), 1);
    task("t03", "Start a new contact", on_screen("contact_new"), 1);
    task("t04", "Open a new note editor", on_screen("note_editor"), 1);
    task("t05", "Open the mail inbox", on_screen("mail_inbox"), 1);
    task("t06", "Open the gallery app", on_screen("gallery"), 1);
    task("t07", "Open the music app", on_screen("music"), 1);

    task("t08", "Turn on static IP in the Wi-Fi advanced settings", has_flag("static_ip_on"), 2);
    task("t09", "Increase the display brightness", has_flag("brightness_up"), 2);
    task("t10", "Set the new contact's ringtone to Chime", has_flag("ringtone_chime"), 2);
    task("t11", "Turn on bold formatting for a new note", has_flag("bold_on"), 2);
    task("t12", "Open the reply screen for the quarterly report mail", on_screen("mail_reply"), 2);
    task("t13", "View the beach photo in the vacation album", has_flag("viewed_beach"), 2);
    task("t14", "Open the Focus playlist", has_flag("playlist_opened"), 2);

    task("t15", "Finish a full factory reset of the device", has_flag("factory_reset_done"), 3);
    task("t16", "Attach the first photo to a reply to the quarterly report mail",
         has_flag("photo_attached"), 3);
    task("t17", "Clear the music play queue", has_flag("queue_cleared"), 3);
    task("t18", "Apply the dark red text style to a new note", has_flag("note_styled"), 3);
    task("t19", "Configure a manual proxy on port 8080", has_flag("proxy_configured"), 3);
    task("t20", "Forward the quarterly report to Bob and send it", has_flag("mail_forwarded"), 3);

    return def;
}

}  // namespace guire
